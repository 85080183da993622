CLI_DESCRIPTION = """
vano: variational autoencoding of functional data.

Train an encoder/decoder pair on functions measured on a grid, then sample
new functions or reconstruct test functions on grids of any resolution.

Typical session:

  vano gen-data grf --n 2048 --m 128 --seed 7 --out train.fds
  vano gen-data grf --n 2048 --m 128 --seed 7 --offset 2048 --out test.fds
  vano train --preset grf --data train.fds --out runs/grf
  vano sample runs/grf/checkpoints/final.ckpt --count 512 --resolution 512 --out samples.fds
  vano eval hs --analytic grf:alpha=2,tau=3 runs/grf/checkpoints/final.ckpt
"""

CLI_EPILOG = """
CSV schemas

  train_log.csv   step, total, recon, kl, effective_lr, wall_ms
                  one row per optimizer step; total = mean(recon + beta * kl)
  metrics.csv     metric_name, value, aux, dataset_a, dataset_b, seed
                  aux holds the maximising sigma for gmmd, the sigma for mmd,
                  the eigenvalue index for pca, the quadrature mode for
                  elbo, "undefined" for a skewness of identical angles and
                  "n/a" otherwise. train ends a run's metrics.csv with the
                  final ELBO over the training set; eval --run DIR appends
                  there, eval --metrics-out PATH (default ./metrics.csv)
                  anywhere else

Files

  *.fds    VANOFDS1 dataset: header, extents, grid, values, provenance JSON
  *.ckpt   VANOCKP1 checkpoint: parameters, encoding buffers, Adam state,
           config and domain JSON

Environment

  VANO_THREADS           worker threads for generation and kernel tiles (1)
  VANO_DETERMINISTIC     reduce parallel work in submission order (true)
  VANO_LOG_LEVEL         logging level (INFO)
  VANO_CHECKPOINT_EVERY  default checkpoint cadence in steps (2000)
  VANO_RUNS_DIR          default parent of run directories (runs)

Exit codes

  0 success, 2 usage or configuration error, 3 malformed data file,
  4 numerical failure during training
"""

CONFIG_HELP = """
Config files hold one 'key = value' per line; '#' starts a comment. The
'experiment' key picks the preset (grf, bumps, custom) that the other keys
override. Lists are comma separated, e.g. 'decoder_hidden = 128,128'.
Print a complete file with 'vano preset grf'.
"""
