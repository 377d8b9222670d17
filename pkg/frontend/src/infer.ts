import yargs from 'yargs';
import { hideBin } from 'yargs/helpers';
import { Prediction, readDataset, writePredictions } from './interchange.js';
import { loadModel } from './io.js';
import { predictEpisodes } from './trainer.js';

async function main(): Promise<void> {
  const argv = await yargs(hideBin(process.argv))
    .option('model', { type: 'string', demandOption: true, describe: 'checkpoint directory' })
    .option('dataset', { type: 'string', demandOption: true, describe: 'dataset interchange file' })
    .option('out', { type: 'string', demandOption: true, describe: 'predictions interchange file' })
    .strict()
    .parse();

  const { model, meta } = await loadModel(argv.model);
  const { header, episodes } = readDataset(argv.dataset);
  const outputs = await predictEpisodes(model, meta, header, episodes);
  const highLen = header.M_v * header.M_h;
  const predictions: Prediction[] = episodes.map((ep, i) => ({
    ue: ep.ue,
    frame: ep.frame + 1, // the predicted frame
    realSq: outputs[i].slice(0, highLen),
    imagSq: outputs[i].slice(highLen),
  }));
  writePredictions(argv.out, predictions, header);
  console.log(
    JSON.stringify({ predictions: predictions.length, out: argv.out, model: argv.model }),
  );
}

main().catch((err) => {
  console.error(`error: ${err.message ?? err}`);
  process.exit(2);
});
