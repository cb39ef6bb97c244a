#include "dmsr/train.hpp"

#include <algorithm>
#include <ostream>

#include "dmsr/adam.hpp"
#include "dmsr/checkpoint.hpp"
#include "dmsr/errors.hpp"

namespace dmsr {

TrainResult train_model(DiffusionModel& model, const std::vector<Slate>& train_slates,
                        const EmbeddingTable& table, const TrainOptions& opts,
                        long start_epoch, std::ostream* log) {
  if (train_slates.empty()) throw DataError("train_model: no training slates");
  std::vector<TrainExample> examples;
  examples.reserve(train_slates.size());
  for (const Slate& s : train_slates)
    examples.push_back({encode_slate(s, table), model.tokenizer.encode(s.label)});

  // Resumed runs reload parameters but restart Adam moments from zero; the
  // per-epoch data stream stays aligned via the (seed, epoch) derivation.
  nn::Adam opt(opts.lr);
  TrainResult result;
  result.epochs_completed = start_epoch;
  std::vector<size_t> order(examples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (long epoch = start_epoch; epoch < start_epoch + opts.epochs; ++epoch) {
    nn::Rng rng(opts.seed ^ (0x9e3779b97f4a7c15ull * static_cast<uint64_t>(epoch + 1)));
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    int batches = 0;
    for (size_t start = 0; start < order.size(); start += opts.batch_size) {
      size_t end = std::min(order.size(), start + opts.batch_size);
      std::vector<TrainExample> batch;
      batch.reserve(end - start);
      for (size_t i = start; i < end; ++i) batch.push_back(examples[order[i]]);
      model.params.zero_grads();
      float loss = training_loss_backward(model, batch, rng, opts.loss);
      opt.step(model.params.params);
      epoch_loss += loss;
      ++batches;
    }
    epoch_loss /= batches;
    result.epoch_losses.push_back(static_cast<float>(epoch_loss));
    result.epochs_completed = epoch + 1;
    if (log) (*log) << "epoch " << (epoch + 1) << " loss " << epoch_loss << "\n";
    if (!opts.checkpoint_path.empty() && opts.checkpoint_every > 0 &&
        (epoch + 1) % opts.checkpoint_every == 0)
      save_checkpoint(model, opts.checkpoint_path, epoch + 1);
  }
  if (!opts.checkpoint_path.empty())
    save_checkpoint(model, opts.checkpoint_path, result.epochs_completed);
  return result;
}

}  // namespace dmsr
