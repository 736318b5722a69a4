#pragma once
// Per-part training, prediction and protocol evaluation.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "riac/cass_render.hpp"
#include "riac/error.hpp"
#include "riac/fusion.hpp"
#include "riac/metrics.hpp"
#include "riac/optim.hpp"
#include "riac/riac_net.hpp"
#include "riac/rng.hpp"
#include "riac/skeleton_io.hpp"

namespace riac::train {

using skeleton::Part;
using Tensor = ad::Tensor;

struct TrainingConfig {
  std::size_t batch_size = 256;
  double learning_rate = 0.001;
  double lr_decay = 0.98;  // multiplier applied every lr_decay_every epochs
  std::size_t lr_decay_every = 20;
  std::size_t max_epochs = 1000;
  std::size_t patience = 50;
  double weight_noise = 0.01;
  double val_fraction = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(learning_rate > 0.0)) throw DomainError("learning rate must be positive");
    if (!(lr_decay > 0.0)) throw DomainError("lr decay multiplier must be positive");
    if (lr_decay_every == 0) throw DomainError("lr decay interval must be at least 1 epoch");
    if (patience == 0) throw DomainError("early-stopping patience must be at least 1");
    if (!(weight_noise >= 0.0)) throw DomainError("weight noise sigma must be non-negative");
    if (batch_size == 0) throw DomainError("batch size must be at least 1");
    if (max_epochs == 0) throw DomainError("max epochs must be at least 1");
    if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw DomainError("validation fraction must lie in [0, 1)");
  }

  // Epochs are counted from 0.
  double lr_at(std::size_t epoch) const {
    return learning_rate * std::pow(lr_decay, static_cast<double>(epoch / lr_decay_every));
  }
};

// ---------------------------------------------------------------------------
// Rendered corpus

struct PartImages {
  cass::CassImage original;
  std::vector<cass::CassImage> augmented;
};

// CASS images per (sequence id, part). Labels come from the manifest in use,
// so one corpus serves every MSR subset.
struct Corpus {
  std::string dataset;
  std::size_t image_size = 0;
  std::map<std::string, std::map<Part, PartImages>> images;

  const PartImages& at(const std::string& id, Part part) const {
    auto it = images.find(id);
    if (it == images.end()) throw DomainError("corpus has no images for sequence '" + id + "'");
    auto jt = it->second.find(part);
    if (jt == it->second.end()) throw DomainError("corpus has no " + skeleton::part_name(part) + " image for '" + id + "'");
    return jt->second;
  }
};

inline Corpus build_corpus(const std::vector<skeleton::ActionSequence>& seqs, const cass::RenderConfig& rc,
                           const cass::AugmentationSpec& aug, std::size_t resample_frames = 60,
                           std::span<const Part> parts = skeleton::kAllParts) {
  rc.validate();
  Corpus c;
  c.image_size = rc.size;
  for (const auto& raw : seqs) {
    if (c.dataset.empty()) c.dataset = raw.dataset;
    const auto seq = resample_frames ? skeleton::resample(raw, resample_frames) : raw;
    const auto scheme = skeleton::scheme_for(seq.joint_count());
    auto& slot = c.images[seq.id];
    for (Part p : parts) {
      PartImages pi;
      pi.original = cass::render_cass(skeleton::extract_part(seq, scheme, p), rc);
      for (auto& a : cass::augment(pi.original, aug))
        if (!a.augmentation.empty()) pi.augmented.push_back(std::move(a));
      slot[p] = std::move(pi);
    }
  }
  return c;
}

// Index columns: file,sequence_id,part,augmentation
inline void write_corpus_images(const std::filesystem::path& dir, const Corpus& c) {
  std::filesystem::create_directories(dir);
  std::ofstream idx(dir / "index.csv");
  if (!idx) throw IoError("cannot write '" + (dir / "index.csv").string() + "'");
  idx << "file,sequence_id,part,augmentation\n";
  for (const auto& [id, parts] : c.images)
    for (const auto& [part, pi] : parts) {
      auto emit = [&](const cass::CassImage& img) {
        const std::string name = cass::cass_filename(c.dataset, id, part, img.augmentation);
        cass::write_ppm(dir / name, img);
        idx << name << ',' << id << ',' << skeleton::part_name(part) << ',' << (img.augmentation.empty() ? "none" : img.augmentation)
            << '\n';
      };
      emit(pi.original);
      for (const auto& a : pi.augmented) emit(a);
    }
  if (!idx) throw IoError("short write to index.csv");
}

inline Corpus read_corpus_images(const std::filesystem::path& dir, const std::string& dataset) {
  const auto index = dir / "index.csv";
  std::ifstream is(index);
  if (!is) throw IoError("cannot open corpus index '" + index.string() + "'");
  Corpus c;
  c.dataset = dataset;
  std::string line;
  std::size_t ln = 0;
  while (std::getline(is, line)) {
    if (++ln == 1 || line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 4) throw ParseError(index.string(), ln, "expected file,sequence_id,part,augmentation");
    Part part;
    try {
      part = skeleton::parse_part(cells[2]);
    } catch (const Error& e) {
      throw ParseError(index.string(), ln, e.what());
    }
    cass::CassImage img = cass::read_ppm(dir / cells[0]);
    img.part = part;
    img.sequence_id = cells[1];
    img.augmentation = cells[3] == "none" ? "" : cells[3];
    if (c.image_size == 0) c.image_size = img.width;
    if (img.width != c.image_size || img.height != c.image_size)
      throw ParseError(index.string(), ln, "image size differs from the rest of the corpus");
    auto& pi = c.images[cells[1]][part];
    if (img.augmentation.empty()) pi.original = std::move(img);
    else pi.augmented.push_back(std::move(img));
  }
  return c;
}

// ---------------------------------------------------------------------------
// Training

struct Sample {
  std::string id;
  std::size_t label = 0;
};

// Stratified, seeded: round(fraction * n_c) samples of each class, always
// leaving at least one behind for training. Both halves keep input order.
inline std::pair<std::vector<Sample>, std::vector<Sample>> stratified_split(const std::vector<Sample>& samples, double fraction,
                                                                            std::uint64_t seed) {
  std::map<std::size_t, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < samples.size(); ++i) by_class[samples[i].label].push_back(i);
  std::vector<char> is_val(samples.size(), 0);
  Rng rng(seed);
  for (auto& [label, idx] : by_class) {
    const auto want = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(idx.size()) + 0.5));
    const std::size_t take = std::min(want, idx.size() - 1);
    rng.shuffle(std::span<std::size_t>(idx));
    for (std::size_t k = 0; k < take; ++k) is_val[idx[k]] = 1;
  }
  std::pair<std::vector<Sample>, std::vector<Sample>> out;
  for (std::size_t i = 0; i < samples.size(); ++i) (is_val[i] ? out.second : out.first).push_back(samples[i]);
  return out;
}

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double lr = 0.0;
  double train_loss = 0.0;      // mean minibatch loss in train mode
  double train_accuracy = 0.0;  // eval mode, un-augmented training images
  double val_loss = std::nan("");
  double val_accuracy = std::nan("");
};

struct TrainResult {
  net::RiacNetModel model;  // best checkpoint
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;  // 1-based
  bool early_stopped = false;
  std::vector<Sample> validation;

  const EpochRecord& best() const { return history.at(best_epoch - 1); }
};

struct EvalStats {
  double loss = 0.0;
  double accuracy = 0.0;
  std::vector<std::vector<double>> probs;
};

// Eval-mode pass over the original images of `samples`.
inline EvalStats evaluate_samples(net::RiacNetModel& model, const Corpus& corpus, Part part, const std::vector<Sample>& samples,
                                  std::size_t chunk = 32) {
  EvalStats st;
  if (samples.empty()) return st;
  ad::NoGradScope no_grad;
  std::size_t hit = 0;
  for (std::size_t lo = 0; lo < samples.size(); lo += chunk) {
    const std::size_t hi = std::min(samples.size(), lo + chunk);
    std::vector<Tensor> xs;
    for (std::size_t i = lo; i < hi; ++i) {
      const auto& img = corpus.at(samples[i].id, part).original;
      if (img.pixels.empty()) throw DomainError("missing " + skeleton::part_name(part) + " image for '" + samples[i].id + "'");
      xs.push_back(net::image_to_tensor(img));
    }
    auto out = net::forward_batch(xs, model, ad::Mode::Eval);
    const std::size_t n = model.config.n_classes;
    auto p = out.probabilities.data();
    for (std::size_t i = lo; i < hi; ++i) {
      std::vector<double> row(p.begin() + static_cast<std::ptrdiff_t>((i - lo) * n),
                              p.begin() + static_cast<std::ptrdiff_t>((i - lo + 1) * n));
      st.loss -= std::log(std::max(row[samples[i].label], 1e-300));
      hit += fusion::argmax(row) == samples[i].label;
      st.probs.push_back(std::move(row));
    }
  }
  st.loss /= static_cast<double>(samples.size());
  st.accuracy = static_cast<double>(hit) / static_cast<double>(samples.size());
  return st;
}

// Trains one branch from scratch on `train` (original + augmented images);
// the validation slice is carved out of `train` internally.
inline TrainResult train_part(const Corpus& corpus, Part part, const std::vector<Sample>& train, const net::NetConfig& net_cfg,
                              const TrainingConfig& cfg, const std::string& tag = {},
                              const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  cfg.validate();
  if (train.empty()) throw DomainError("train_part: empty training split");
  if (corpus.image_size != net_cfg.input_size)
    throw ShapeError("corpus images are " + std::to_string(corpus.image_size) + " px, model expects " +
                     std::to_string(net_cfg.input_size));

  TrainResult result;
  auto [fit, val] = stratified_split(train, cfg.val_fraction, derive_seed(cfg.seed, "validation"));
  result.validation = val;

  struct PoolItem {
    const cass::CassImage* image;
    std::size_t label;
  };
  std::vector<PoolItem> pool;
  for (const auto& s : fit) {
    const auto& pi = corpus.at(s.id, part);
    pool.push_back({&pi.original, s.label});
    for (const auto& a : pi.augmented) pool.push_back({&a, s.label});
  }

  const auto part_id = static_cast<std::uint64_t>(part);
  net::RiacNetModel model = net::init_model(net_cfg, derive_seed(cfg.seed, "init", part_id));
  const auto params = model.parameters();
  ad::AdamState adam({cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps});
  Rng order_rng(derive_seed(cfg.seed, "order", part_id));
  Rng noise_rng(derive_seed(cfg.seed, "noise", part_id));
  std::vector<std::vector<double>> clean(params.size());

  double best_monitor = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  std::uint64_t step = 0;

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.lr = adam.options.lr = cfg.lr_at(epoch);
    order_rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    for (std::size_t lo = 0; lo < order.size(); lo += cfg.batch_size) {
      const std::size_t hi = std::min(order.size(), lo + cfg.batch_size);
      std::vector<Tensor> xs;
      std::vector<std::size_t> ys;
      for (std::size_t i = lo; i < hi; ++i) {
        xs.push_back(net::image_to_tensor(*pool[order[i]].image));
        ys.push_back(pool[order[i]].label);
      }
      // Noise perturbs the weights seen by this forward/backward pass only.
      if (cfg.weight_noise > 0.0) {
        for (std::size_t k = 0; k < params.size(); ++k) {
          auto d = params[k].data();
          clean[k].assign(d.begin(), d.end());
          for (double& v : d) v += cfg.weight_noise * noise_rng.normal();
        }
      }
      ad::Tape tape;
      Tensor loss;
      {
        ad::TapeScope scope(tape);
        loss = net::forward_batch(xs, model, ad::Mode::Train, ys, derive_seed(cfg.seed, "dropout", part_id, step)).loss;
      }
      const double lv = loss.item();
      if (!std::isfinite(lv))
        throw NumericError("training diverged" + (tag.empty() ? "" : " (" + tag + ")") + ": loss " + std::to_string(lv) +
                           " at epoch " + std::to_string(epoch + 1) + ", step " + std::to_string(step));
      ad::backward(tape, loss);
      tape.clear();
      if (cfg.weight_noise > 0.0)
        for (std::size_t k = 0; k < params.size(); ++k) std::copy(clean[k].begin(), clean[k].end(), params[k].data().begin());
      adam_step(params, adam);
      model.zero_grad();
      loss_sum += lv * static_cast<double>(hi - lo);
      ++step;
    }
    rec.train_loss = loss_sum / static_cast<double>(order.size());

    const auto tr = evaluate_samples(model, corpus, part, fit);
    rec.train_accuracy = tr.accuracy;
    double monitor = tr.loss;
    if (!val.empty()) {
      const auto vs = evaluate_samples(model, corpus, part, val);
      rec.val_loss = vs.loss;
      rec.val_accuracy = vs.accuracy;
      monitor = vs.loss;
    }
    if (!std::isfinite(monitor)) throw NumericError("non-finite monitored loss" + (tag.empty() ? "" : " (" + tag + ")"));
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (monitor < best_monitor) {
      best_monitor = monitor;
      result.best_epoch = rec.epoch;
      result.model = model.clone();
    } else if (rec.epoch - result.best_epoch >= cfg.patience) {
      result.early_stopped = true;
      break;
    }
  }
  return result;
}

inline fusion::PartPredictions predict_part(net::RiacNetModel& model, const Corpus& corpus, Part part,
                                            const std::vector<Sample>& samples, const std::vector<std::string>& class_names) {
  if (class_names.size() != model.config.n_classes) throw ShapeError("class list does not match the model's output size");
  fusion::PartPredictions p;
  p.part = part;
  p.class_names = class_names;
  auto st = evaluate_samples(model, corpus, part, samples);
  for (const auto& s : samples) {
    p.ids.push_back(s.id);
    p.labels.push_back(s.label);
  }
  p.probs = std::move(st.probs);
  return p;
}

// ---------------------------------------------------------------------------
// Protocol evaluation

enum class FusionMode { Literal, Clean };

inline std::string fusion_mode_name(FusionMode m) { return m == FusionMode::Literal ? "literal" : "clean"; }

inline FusionMode parse_fusion_mode(const std::string& s) {
  if (s == "literal") return FusionMode::Literal;
  if (s == "clean") return FusionMode::Clean;
  throw DomainError("unknown fusion mode '" + s + "' (expected literal or clean)");
}

struct EvalConfig {
  TrainingConfig training;
  net::NetConfig net;  // n_classes is set per evaluated row
  FusionMode fusion_mode = FusionMode::Literal;
  std::size_t max_folds = 0;  // 0 = every fold
  std::size_t jobs = 1;
  std::function<void(const std::string&)> log;
};

struct RunRecord {
  Part part = Part::FS;
  std::size_t fold = 0;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  bool early_stopped = false;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

struct PartSummary {
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

struct RowReport {
  std::string name;
  std::vector<std::string> class_names;
  std::size_t folds = 0;
  std::size_t test_samples = 0;
  std::map<Part, PartSummary> parts;
  bool fused = false;
  fusion::FusionWeights weights{};
  double fused_accuracy = 0.0;
  metrics::Matrix confusion;
  metrics::RocReport roc_fused;
  metrics::RocReport roc_fs;
  std::vector<RunRecord> runs;
  std::map<Part, fusion::PartPredictions> predictions;  // test side, pooled over folds
};

struct ProtocolReport {
  std::string dataset;
  std::string protocol;
  FusionMode fusion_mode = FusionMode::Literal;
  std::uint64_t seed = 0;
  std::vector<RowReport> rows;
  std::vector<std::pair<std::string, std::string>> config;
};

namespace detail {

// Runs `n` independent jobs on up to `jobs` threads. Jobs write to their own
// slots, so results do not depend on scheduling.
inline void run_parallel(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& job) {
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < n;) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

inline std::vector<double> fold_weights(const std::vector<std::size_t>& fold_sizes) {
  std::vector<double> w;
  const double F = static_cast<double>(fold_sizes.size());
  for (std::size_t n : fold_sizes)
    for (std::size_t i = 0; i < n; ++i) w.push_back(1.0 / (F * static_cast<double>(n)));
  return w;
}

}  // namespace detail

// One table row: every fold, every requested part, then fusion over the five
// body parts when all of them were trained.
inline RowReport evaluate_split(const Corpus& corpus, const skeleton::DatasetManifest& manifest, const skeleton::SplitSpec& spec,
                                const EvalConfig& cfg, const std::string& name, std::span<const Part> parts = skeleton::kAllParts) {
  RowReport row;
  row.name = name;
  row.class_names = manifest.class_names;
  std::vector<skeleton::Fold> folds = spec.folds;
  if (cfg.max_folds && folds.size() > cfg.max_folds) folds.resize(cfg.max_folds);
  if (folds.empty()) throw DomainError("protocol '" + spec.protocol + "' produced no folds");
  row.folds = folds.size();

  net::NetConfig net_cfg = cfg.net;
  net_cfg.n_classes = manifest.class_names.size();
  auto samples_of = [&](const std::vector<std::string>& ids) {
    std::vector<Sample> out;
    for (const auto& id : ids) out.push_back({id, static_cast<std::size_t>(manifest.entry(id).label)});
    return out;
  };

  struct JobOut {
    RunRecord run;
    fusion::PartPredictions test, val;
  };
  const std::size_t P = parts.size();
  std::vector<JobOut> out(folds.size() * P);
  std::mutex log_mu;
  detail::run_parallel(out.size(), cfg.jobs, [&](std::size_t j) {
    const std::size_t f = j / P;
    const Part part = parts[j % P];
    const auto train = samples_of(folds[f].train);
    const auto test = samples_of(folds[f].test);
    if (train.empty() || test.empty()) throw DomainError("fold " + std::to_string(f) + " has an empty train or test side");
    TrainingConfig tc = cfg.training;
    tc.seed = derive_seed(cfg.training.seed, "fold", f);  // the part enters inside train_part
    const std::string tag = name + " " + skeleton::part_name(part) + " fold " + std::to_string(f);
    auto tr = train_part(corpus, part, train, net_cfg, tc, tag);
    auto& o = out[j];
    o.run.part = part;
    o.run.fold = f;
    o.run.history = tr.history;
    o.run.best_epoch = tr.best_epoch;
    o.run.early_stopped = tr.early_stopped;
    o.run.train_loss = tr.best().train_loss;
    o.run.train_accuracy = tr.best().train_accuracy;
    o.test = predict_part(tr.model, corpus, part, test, manifest.class_names);
    o.run.test_accuracy = metrics::accuracy(o.test.predicted(), o.test.labels);
    if (!tr.validation.empty()) o.val = predict_part(tr.model, corpus, part, tr.validation, manifest.class_names);
    if (cfg.log) {
      std::lock_guard lock(log_mu);
      cfg.log(tag + ": epochs " + std::to_string(tr.history.size()) + ", best " + std::to_string(tr.best_epoch) +
              ", train acc " + std::to_string(o.run.train_accuracy) + ", test acc " + std::to_string(o.run.test_accuracy));
    }
  });

  std::map<Part, fusion::PartPredictions> val_pooled;
  std::vector<std::size_t> test_sizes, val_sizes;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    test_sizes.push_back(out[f * P].test.size());
    val_sizes.push_back(out[f * P].val.size());
  }
  for (std::size_t pi = 0; pi < P; ++pi) {
    const Part part = parts[pi];
    PartSummary s;
    for (std::size_t f = 0; f < folds.size(); ++f) {
      auto& o = out[f * P + pi];
      s.train_loss += o.run.train_loss;
      s.train_accuracy += o.run.train_accuracy;
      s.test_accuracy += o.run.test_accuracy;
      if (f == 0) {
        row.predictions[part] = o.test;
        val_pooled[part] = o.val;
      } else {
        row.predictions[part].append(o.test);
        val_pooled[part].append(o.val);
      }
      row.runs.push_back(std::move(o.run));
    }
    const double F = static_cast<double>(folds.size());
    s.train_loss /= F;
    s.train_accuracy /= F;
    s.test_accuracy /= F;
    row.parts[part] = s;
  }
  row.test_samples = std::accumulate(test_sizes.begin(), test_sizes.end(), std::size_t{0});

  const auto& any_preds = row.predictions.begin()->second;
  if (row.predictions.count(Part::FS)) {
    const auto& fs = row.predictions.at(Part::FS);
    try {
      row.roc_fs = metrics::roc_auc(fs.probs, fs.labels);
    } catch (const DomainError&) {
      // Single-class test side: no ROC.
    }
  }

  const bool all_fused = std::all_of(skeleton::kFusedParts.begin(), skeleton::kFusedParts.end(),
                                     [&](Part p) { return row.predictions.count(p) > 0; });
  if (!all_fused) {
    row.confusion = metrics::confusion_matrix(any_preds.predicted(), any_preds.labels, row.class_names.size());
    return row;
  }
  row.fused = true;
  std::vector<fusion::PartPredictions> test_parts, val_parts;
  for (Part p : skeleton::kFusedParts) {
    test_parts.push_back(row.predictions.at(p));
    val_parts.push_back(val_pooled.at(p));
  }
  if (cfg.fusion_mode == FusionMode::Literal) {
    const auto w = detail::fold_weights(test_sizes);
    row.weights = fusion::search_weights(test_parts, w, cfg.jobs).weights;
  } else {
    if (val_parts.front().size() == 0) throw DomainError("clean fusion needs a validation slice (val_fraction > 0)");
    const auto w = detail::fold_weights(val_sizes);
    row.weights = fusion::search_weights(val_parts, w, cfg.jobs).weights;
  }
  const auto fused = fusion::fuse(row.weights, test_parts);
  row.fused_accuracy = fusion::weighted_accuracy(fused.predicted, test_parts.front().labels, detail::fold_weights(test_sizes));
  row.confusion = metrics::confusion_matrix(fused.predicted, test_parts.front().labels, row.class_names.size());
  try {
    row.roc_fused = metrics::roc_auc(fused.scores, test_parts.front().labels);
  } catch (const DomainError&) {
  }
  return row;
}

// MSR rows are the three activity sets plus their mean ("Overall").
inline ProtocolReport evaluate_protocol(const Corpus& corpus, const skeleton::DatasetManifest& manifest, const std::string& protocol,
                                        const EvalConfig& cfg, std::span<const Part> parts = skeleton::kAllParts) {
  ProtocolReport rep;
  rep.dataset = manifest.dataset;
  rep.protocol = protocol;
  rep.fusion_mode = cfg.fusion_mode;
  rep.seed = cfg.training.seed;
  if (manifest.dataset == "msr") {
    for (const std::string tag : {"AS1", "AS2", "AS3"}) {
      const auto sub = manifest.subset(tag);
      rep.rows.push_back(evaluate_split(corpus, sub, skeleton::make_splits(sub, protocol), cfg, tag, parts));
    }
    RowReport overall;
    overall.name = "Overall";
    overall.fused = rep.rows.front().fused;
    for (Part p : parts) {
      PartSummary s;
      for (const auto& r : rep.rows) {
        s.train_loss += r.parts.at(p).train_loss / 3.0;
        s.train_accuracy += r.parts.at(p).train_accuracy / 3.0;
        s.test_accuracy += r.parts.at(p).test_accuracy / 3.0;
      }
      overall.parts[p] = s;
    }
    for (const auto& r : rep.rows) {
      overall.fused_accuracy += r.fused_accuracy / 3.0;
      overall.folds += r.folds;
      overall.test_samples += r.test_samples;
    }
    rep.rows.push_back(std::move(overall));
  } else {
    rep.rows.push_back(evaluate_split(corpus, manifest, skeleton::make_splits(manifest, protocol), cfg, manifest.dataset, parts));
  }
  return rep;
}

}  // namespace riac::train
