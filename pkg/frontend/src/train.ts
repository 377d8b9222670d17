import yargs from 'yargs';
import { hideBin } from 'yargs/helpers';
import { saveModel } from './io.js';
import { DEFAULT_TRAIN_CONFIG, trainOnDataset } from './trainer.js';

async function main(): Promise<void> {
  const argv = await yargs(hideBin(process.argv))
    .option('dataset', { type: 'string', demandOption: true, describe: 'dataset interchange file' })
    .option('out', { type: 'string', demandOption: true, describe: 'checkpoint directory' })
    .option('epochs', { type: 'number', default: DEFAULT_TRAIN_CONFIG.epochs })
    .option('batch', { type: 'number', default: DEFAULT_TRAIN_CONFIG.batchSize })
    .option('lr', { type: 'number', default: DEFAULT_TRAIN_CONFIG.learningRate })
    .option('split', { type: 'number', default: DEFAULT_TRAIN_CONFIG.valFraction, describe: 'validation fraction' })
    .option('seed', { type: 'number', default: DEFAULT_TRAIN_CONFIG.seed, describe: 'split seed' })
    .strict()
    .parse();

  const outcome = await trainOnDataset(argv.dataset, {
    batchSize: argv.batch,
    learningRate: argv.lr,
    epochs: argv.epochs,
    valFraction: argv.split,
    seed: argv.seed,
    verbose: true,
  });
  await saveModel(outcome.model, argv.out, outcome.meta);
  const last = outcome.history[outcome.history.length - 1];
  console.log(
    JSON.stringify({
      checkpoint: argv.out,
      epochs: argv.epochs,
      total_params: outcome.meta.totalParams,
      final_val_mse: last.valMse,
      bilinear_val_mse: outcome.bilinearValMse,
      episodes: outcome.episodes.length,
    }),
  );
}

main().catch((err) => {
  console.error(`error: ${err.message ?? err}`);
  process.exit(2);
});
