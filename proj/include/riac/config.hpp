#pragma once
// Flat key = value run configuration. Every key has a default; unknown keys
// are rejected.

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "riac/cass_render.hpp"
#include "riac/error.hpp"
#include "riac/riac_net.hpp"
#include "riac/training.hpp"

namespace riac::config {

struct KeySpec {
  std::string key;
  std::string value;  // default
  std::string doc;
};

inline constexpr const char* kOutputRootEnv = "RIAC_OUTPUT_ROOT";

inline const std::vector<KeySpec>& key_specs() {
  static const std::vector<KeySpec> keys = {
      // data
      {"dataset", "utkinect", "utkinect | florence | msr | synthetic"},
      {"raw_path", "", "raw dataset location (directory, or the Florence text file)"},
      {"output_dir", "", "output root; empty = $RIAC_OUTPUT_ROOT, else ./riac_out"},
      {"corpus_dir", "", "ingested corpus; empty = <output_dir>/corpus"},
      {"cass_dir", "", "rendered images; empty = <output_dir>/cass"},
      {"msr_rows_per_frame", "20", "rows per MSR frame (20, or 40 for files with screen coordinates)"},
      {"synthetic_subjects", "10", "subjects per class in the synthetic corpus"},
      {"synthetic_seed", "7", "seed of the synthetic corpus"},
      // rendering
      {"resample_frames", "60", "frames per sequence before rendering (0 = keep)"},
      {"image_size", "224", "CASS image side in pixels"},
      {"hue_start", "240", "hue of the first frame, degrees"},
      {"hue_end", "0", "hue of the last frame, degrees"},
      {"line_width", "1", "bone stroke width in pixels"},
      {"margin", "0.10", "blank margin per side as a fraction of the image"},
      {"augment", "all", "train-side augmentation: none | all | list of crop,hflip,vflip,rot+45,rot-45"},
      // architecture
      {"sequence_mode", "spatial-rows", "spatial-rows | single-step"},
      {"lstm_hidden", "128", "units per LSTM layer"},
      {"dropout", "0.2", "dropout before the dense layer"},
      {"bn_eps", "1e-5", "batch-norm epsilon"},
      {"bn_momentum", "0.9", "batch-norm running-average momentum"},
      // training
      {"batch_size", "256", "images per minibatch"},
      {"learning_rate", "0.001", "initial Adam step size"},
      {"lr_decay", "0.98", "multiplier applied every lr_decay_every epochs (0.02 = the literal reading)"},
      {"lr_decay_every", "20", "epochs between learning-rate decays"},
      {"max_epochs", "1000", "upper bound on epochs"},
      {"patience", "50", "epochs without validation-loss improvement before stopping"},
      {"weight_noise", "0.01", "std of Gaussian weight noise per training step (0 = off)"},
      {"val_fraction", "0.1", "stratified validation slice taken from each training fold"},
      {"adam_beta1", "0.9", "Adam first-moment decay"},
      {"adam_beta2", "0.999", "Adam second-moment decay"},
      {"adam_eps", "1e-8", "Adam denominator epsilon"},
      // evaluation
      {"protocol", "loocv-sequence", "loocv-sequence | loocv-subject | cross-subject | holdout"},
      {"test_subjects", "3,6,9", "subjects held out by the holdout protocol"},
      {"max_folds", "0", "evaluate only the first N folds (0 = all)"},
      {"subset", "", "MSR activity set used by train/predict/fuse (AS1, AS2, AS3)"},
      {"fold", "0", "fold index used by train/predict/fuse"},
      {"part", "FS", "branch used by train/predict"},
      {"parts", "FS,HS,LL,RL,LH,RH", "branches to train in evaluate"},
      {"fusion_mode", "literal", "literal (weights tuned on test) | clean (tuned on validation)"},
      {"weights", "", "fixed fusion weights for 'fuse', e.g. 2,3,4,4,5; empty = search"},
      // verification
      {"gradcheck_eps", "1e-4", "central-difference step"},
      {"gradcheck_primitive_tol", "1e-6", "max relative error for primitives"},
      {"gradcheck_composed_tol", "1e-4", "max relative error for composed blocks"},
      {"gradcheck_size", "28", "input side for composed-block checks"},
      // run control
      {"seed", "1", "base seed; every stream is derived from it"},
      {"jobs", "1", "worker threads"},
  };
  return keys;
}

class RunConfig {
 public:
  RunConfig() {
    for (const auto& k : key_specs()) values_[k.key] = k.value;
  }

  bool known(const std::string& key) const { return values_.count(key) > 0; }

  void set(const std::string& key, const std::string& value) {
    if (!known(key)) throw UsageError("unknown config key '" + key + "'");
    values_[key] = value;
  }

  // "key = value" lines; '#' starts a comment.
  void load_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config '" + path.string() + "'");
    std::string line;
    std::size_t ln = 0;
    while (std::getline(is, line)) {
      ++ln;
      if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
      const auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string{};
        return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
      };
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ParseError(path.string(), ln, "expected 'key = value'");
      const std::string key = trim(line.substr(0, eq));
      if (!known(key)) throw ParseError(path.string(), ln, "unknown config key '" + key + "'");
      values_[key] = trim(line.substr(eq + 1));
    }
  }

  const std::string& get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw UsageError("unknown config key '" + key + "'");
    return it->second;
  }

  double real(const std::string& key) const {
    const auto& s = get(key);
    double v = 0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) throw UsageError("config key '" + key + "' is not a number: '" + s + "'");
    return v;
  }

  std::uint64_t count(const std::string& key) const {
    const auto& s = get(key);
    std::uint64_t v = 0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
      throw UsageError("config key '" + key + "' is not a non-negative integer: '" + s + "'");
    return v;
  }

  std::filesystem::path output_dir() const {
    if (!get("output_dir").empty()) return get("output_dir");
    if (const char* env = std::getenv(kOutputRootEnv); env && *env) return env;
    return "riac_out";
  }

  std::filesystem::path corpus_dir() const { return get("corpus_dir").empty() ? output_dir() / "corpus" : std::filesystem::path(get("corpus_dir")); }
  std::filesystem::path cass_dir() const { return get("cass_dir").empty() ? output_dir() / "cass" : std::filesystem::path(get("cass_dir")); }

  // Fully resolved settings in declaration order (paths expanded).
  std::vector<std::pair<std::string, std::string>> resolved() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& k : key_specs()) {
      std::string v = get(k.key);
      if (k.key == "output_dir") v = output_dir().string();
      if (k.key == "corpus_dir") v = corpus_dir().string();
      if (k.key == "cass_dir") v = cass_dir().string();
      out.emplace_back(k.key, v);
    }
    return out;
  }

  std::string dump() const {
    std::ostringstream os;
    for (const auto& [k, v] : resolved()) os << k << " = " << v << '\n';
    return os.str();
  }

  cass::RenderConfig render() const {
    cass::RenderConfig rc;
    rc.size = count("image_size");
    rc.hue_start = real("hue_start");
    rc.hue_end = real("hue_end");
    rc.line_width = static_cast<int>(count("line_width"));
    rc.margin = real("margin");
    rc.validate();
    return rc;
  }

  cass::AugmentationSpec augmentation() const { return cass::AugmentationSpec::parse(get("augment")); }

  net::NetConfig net(std::size_t n_classes) const {
    net::NetConfig c;
    c.input_size = count("image_size");
    c.n_classes = n_classes;
    c.lstm_hidden = count("lstm_hidden");
    c.dropout = real("dropout");
    c.sequence_mode = net::parse_sequence_mode(get("sequence_mode"));
    c.bn.eps = real("bn_eps");
    c.bn.momentum = real("bn_momentum");
    c.validate();
    return c;
  }

  train::TrainingConfig training() const {
    train::TrainingConfig t;
    t.batch_size = count("batch_size");
    t.learning_rate = real("learning_rate");
    t.lr_decay = real("lr_decay");
    t.lr_decay_every = count("lr_decay_every");
    t.max_epochs = count("max_epochs");
    t.patience = count("patience");
    t.weight_noise = real("weight_noise");
    t.val_fraction = real("val_fraction");
    t.beta1 = real("adam_beta1");
    t.beta2 = real("adam_beta2");
    t.adam_eps = real("adam_eps");
    t.seed = count("seed");
    t.validate();
    return t;
  }

  std::vector<skeleton::Part> parts() const {
    std::vector<skeleton::Part> out;
    std::istringstream ss(get("parts"));
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (!tok.empty()) out.push_back(skeleton::parse_part(tok));
    if (out.empty()) throw UsageError("config key 'parts' names no parts");
    return out;
  }

  std::set<int> test_subjects() const {
    std::set<int> out;
    std::istringstream ss(get("test_subjects"));
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (!tok.empty()) out.insert(std::stoi(tok));
    return out;
  }

  train::EvalConfig eval(std::size_t n_classes) const {
    train::EvalConfig e;
    e.training = training();
    e.net = net(n_classes);
    e.fusion_mode = train::parse_fusion_mode(get("fusion_mode"));
    e.max_folds = count("max_folds");
    e.jobs = count("jobs");
    return e;
  }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace riac::config
