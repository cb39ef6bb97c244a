#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dmsr/diffusion.hpp"
#include "dmsr/embeddings.hpp"

namespace dmsr {

struct TrainOptions {
  int epochs = 1000;
  int batch_size = 64;
  float lr = 1e-4f;
  uint64_t seed = 1;
  int checkpoint_every = 100;
  std::string checkpoint_path;  // empty: no periodic checkpoints
  LossKind loss = LossKind::kVelocity;
};

struct TrainResult {
  std::vector<float> epoch_losses;
  long epochs_completed = 0;
};

// Joint training of denoiser and tau. Per-epoch RNG derives from
// (seed, epoch) so a resumed run continues the exact same stream. A
// non-finite loss aborts with the last periodic checkpoint still on disk.
TrainResult train_model(DiffusionModel& model, const std::vector<Slate>& train_slates,
                        const EmbeddingTable& table, const TrainOptions& opts,
                        long start_epoch = 0, std::ostream* log = nullptr);

}  // namespace dmsr
