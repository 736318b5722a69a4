// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance            all criteria
//   acceptance 2 5 9      selected criteria (11 implies a run of 9)
//
// Exit status is 0 only when every selected criterion passes.

#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "riac/grad_suite.hpp"
#include "riac/metrics.hpp"
#include "riac/report.hpp"
#include "riac/riac_net.hpp"
#include "riac/synthetic.hpp"
#include "riac/training.hpp"
#include "test_util.hpp"

using namespace riac;
using skeleton::Part;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int prec = 3) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

// ---------------------------------------------------------------------------
// 1. Gradient suite

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  auto results = ad::run_gradient_suite("all");
  const double secs = seconds_since(t0);
  double worst_prim = 0, worst_comp = 0;
  std::string failed;
  bool adrb = false, model = false;
  for (const auto& r : results) {
    (r.composed ? worst_comp : worst_prim) = std::max(r.composed ? worst_comp : worst_prim, r.max_rel_error);
    if (!r.passed) failed += " " + r.name;
    adrb |= r.name.rfind("adrb", 0) == 0;
    model |= r.name.rfind("model", 0) == 0;
  }
  Outcome o;
  o.pass = failed.empty() && adrb && model && worst_prim < 1e-6 && worst_comp < 1e-4 && secs < 300.0;
  o.detail = std::to_string(results.size()) + " checks, primitives max " + fmt(worst_prim) + " (<1e-6), composed max " +
             fmt(worst_comp) + " (<1e-4), " + fmt(secs) + " s (<300)" + (failed.empty() ? "" : ", failed:" + failed);
  return o;
}

// ---------------------------------------------------------------------------
// 2. STCF shapes at 224

Outcome stcf_shapes() {
  const auto t0 = Clock::now();
  net::NetConfig cfg;
  cfg.input_size = 224;
  std::map<std::string, ad::Shape> out;
  for (const auto& l : net::architecture(cfg)) out[l.name] = l.output;
  const ad::Shape branch{112, 112, 64}, fused{112, 112, 256};
  bool ok = out.at("stcf.branch1.conv1x1/2") == branch && out.at("stcf.branch2.conv3x3/2") == branch &&
            out.at("stcf.branch3.conv3x3/2") == branch && out.at("stcf.branch4.conv1x1/1") == branch &&
            out.at("stcf.concat") == fused;
  // Cross-check spatial sizes through the real operators with narrow channels.
  net::NetConfig narrow = cfg;
  narrow.stcf = {1, 1, 1, 1, 1, 1, 1};
  auto m = net::init_model(narrow, 1);
  ad::NoGradScope ng;
  auto b = net::stcf_branches(ad::Tensor({224, 224, 3}), m);
  for (const auto& t : {b.b1, b.b2, b.b3, b.b4}) ok = ok && t.shape() == ad::Shape{112, 112, 1};
  const double secs = seconds_since(t0);
  return {ok && secs < 1.0, "branches 112x112x64 x4, fused 112x112x256, " + fmt(secs) + " s (<1)"};
}

// ---------------------------------------------------------------------------
// 3. Attention invariants

net::NetConfig small_net() {
  net::NetConfig c;
  c.input_size = 16;
  c.n_classes = 3;
  c.lstm_hidden = 6;
  c.stcf = {2, 2, 2, 2, 2, 2, 2};
  return c;
}

ad::Tensor random_image(std::size_t s, Rng& rng, double scale) {
  ad::Tensor x({s, s, 3});
  for (double& v : x.data()) v = scale * rng.uniform(-1.0, 1.0);
  return x;
}

Outcome attention_invariants() {
  ad::NoGradScope ng;
  Rng rng(31);
  std::size_t half = 0, open = 0, nonneg = 0;
  const std::size_t trials = 100;
  for (std::size_t k = 0; k < trials; ++k) {
    auto m = net::init_model(small_net(), 1000 + k);
    auto x = random_image(16, rng, 3.0);
    bool in_range = true, relu_ok = true;
    const auto map = net::attention_map(x, m);
    for (double v : map.data()) in_range = in_range && v > 0.0 && v < 1.0;
    const auto y = net::adrb_forward(x, m);
    for (double v : y.data()) relu_ok = relu_ok && v >= 0.0;
    open += in_range;
    nonneg += relu_ok;
    for (auto* c : {&m.attention.coarse, &m.attention.pooled, &m.attention.gate}) {
      for (double& v : c->weight.data()) v = 0.0;
      for (double& v : c->bias.data()) v = 0.0;
    }
    bool all_half = true;
    const auto zero_map = net::attention_map(x, m);
    for (double v : zero_map.data()) all_half = all_half && v == 0.5;
    half += all_half;
  }
  return {half == trials && open == trials && nonneg == trials,
          "zero-param map == 0.5: " + std::to_string(half) + "/100, map in (0,1): " + std::to_string(open) +
              "/100, ADRB >= 0: " + std::to_string(nonneg) + "/100"};
}

// ---------------------------------------------------------------------------
// 4. LSTM invariants

Outcome lstm_invariants() {
  ad::NoGradScope ng;
  Rng rng(41);
  const std::size_t H = 6, I = 4, trials = 100;
  std::size_t zero_ok = 0, copy_ok = 0, bound_ok = 0;
  for (std::size_t k = 0; k < trials; ++k) {
    auto p = net::detail::make_lstm(I, H, rng);
    ad::Tensor seq({9, I});
    for (double& v : seq.data()) v = rng.uniform(-5, 5);
    bool bounded = true;
    const auto run = net::lstm_layer(seq, p);
    for (double v : run.sequence.data()) bounded = bounded && std::abs(v) < 1.0;
    bound_ok += bounded;

    auto forced = p;
    forced.bias = p.bias.clone(false);
    for (std::size_t j = 0; j < H; ++j) {
      forced.bias.data()[j] = 1000.0;       // input gate -> 1
      forced.bias.data()[H + j] = -1000.0;  // forget gate -> 0
    }
    net::LstmState prev{ad::Tensor({1, H}), ad::Tensor({1, H})};
    for (double& v : prev.h.data()) v = rng.uniform(-0.9, 0.9);
    for (double& v : prev.c.data()) v = rng.uniform(-3, 3);
    auto step = net::lstm_cell(ad::detail::random_tensor({1, I}, rng, 1.0, false), prev, forced);
    bool copied = true;
    for (std::size_t j = 0; j < H; ++j) copied = copied && step.state.c.data()[j] == step.candidate.data()[j];
    copy_ok += copied;

    auto zero = p;
    zero.w_input = ad::Tensor({I, 4 * H});
    zero.w_hidden = ad::Tensor({H, 4 * H});
    zero.bias = ad::Tensor({4 * H});
    bool zeros = true;
    const auto zero_run = net::lstm_layer(seq, zero);
    for (double v : zero_run.sequence.data()) zeros = zeros && v == 0.0;
    zero_ok += zeros;
  }
  return {zero_ok == trials && copy_ok == trials && bound_ok == trials,
          "zero params -> h == 0: " + std::to_string(zero_ok) + "/100, f=0,i=1 -> C == C~: " + std::to_string(copy_ok) +
              "/100, |h| < 1: " + std::to_string(bound_ok) + "/100"};
}

// ---------------------------------------------------------------------------
// 5. CASS golden image

Outcome cass_golden() {
  skeleton::PartTrajectory tr;
  tr.sequence_id = "golden";
  tr.rows.resize(2);
  for (int t = 0; t < 4; ++t) {
    tr.rows[0].push_back({static_cast<double>(t), 0.0, 0.0});
    tr.rows[1].push_back({static_cast<double>(t), 1.0, 0.0});
  }
  tr.chains = {{0, 1}};
  cass::RenderConfig rc;
  rc.size = 10;
  rc.margin = 0.1;
  auto img = cass::render_cass(tr, rc);
  testutil::TempDir dir("acc_golden");
  cass::write_ppm(dir / "r.ppm", img);
  const auto golden_path = std::string(RIAC_TEST_DATA) + "/cass_2joint_4frame.ppm";
  const bool bytes = testutil::read_text(dir / "r.ppm") == testutil::read_text(golden_path);
  const bool first = img.rgb(1, 3) == cass::Rgb{0, 0, 255} && cass::temporal_color(0, 4) == cass::Rgb{0, 0, 255};
  const bool last = img.rgb(8, 6) == cass::Rgb{255, 0, 0} && cass::temporal_color(3, 4) == cass::Rgb{255, 0, 0};
  const bool again = cass::render_cass(tr, rc).pixels == img.pixels;
  return {bytes && first && last && again, std::string("byte-exact PPM ") + (bytes ? "yes" : "no") + ", first (0,0,255) " +
                                               (first ? "yes" : "no") + ", last (255,0,0) " + (last ? "yes" : "no") +
                                               ", re-render identical " + (again ? "yes" : "no")};
}

// ---------------------------------------------------------------------------
// 6. Resampling

skeleton::ActionSequence ramp(std::size_t n) {
  skeleton::ActionSequence s;
  s.id = "ramp";
  for (std::size_t f = 0; f < n; ++f) {
    const double v = static_cast<double>(f) / static_cast<double>(n - 1);
    s.frames.push_back({{{v, 1.0 - v, 0.25 * v}, {std::sin(v), v * v, 3.0}}});
  }
  return s;
}

Outcome resampling() {
  bool ok = true;
  std::string d;
  for (std::size_t n : {120u, 5u}) {
    auto s = ramp(n);
    auto r = skeleton::resample(s, 60);
    const bool good = r.frame_count() == 60 && r.frames.front() == s.frames.front() && r.frames.back() == s.frames.back();
    ok = ok && good;
    d += std::to_string(n) + "->60 " + (good ? "ok" : "BAD") + ", ";
  }
  auto s60 = ramp(60);
  s60.frames[3].joints[1].x = 0.1 + 0.2;
  auto r60 = skeleton::resample(s60, 60);
  bool same = r60.frames.size() == 60;
  for (std::size_t f = 0; same && f < 60; ++f)
    same = std::memcmp(r60.frames[f].joints.data(), s60.frames[f].joints.data(), 2 * sizeof(skeleton::Joint3D)) == 0;
  ok = ok && same;
  skeleton::ActionSequence two;
  two.id = "two";
  two.frames = {{{{0.0, 0.0, 0.0}}}, {{{1.0, 0.0, 0.0}}}};
  const double x30 = skeleton::resample(two, 60).frames[30].joints[0].x;
  ok = ok && x30 == 30.0 / 59.0;
  d += std::string("60->60 bit-identical ") + (same ? "yes" : "no") + ", x(30) = " + fusion::format_double(x30) + " (30/59)";
  return {ok, d};
}

// ---------------------------------------------------------------------------
// 7. Fusion oracle

Outcome fusion_oracle() {
  const auto t0 = Clock::now();
  std::size_t matched = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto parts = oracle::dyadic_parts(7000 + seed, 20, 4);
    auto got = fusion::search_weights(parts);
    auto want = oracle::oracle_search(parts);
    matched += got.accuracy == want.accuracy && got.weights == want.w;
  }
  const double secs = seconds_since(t0);
  return {matched == 5 && secs < 10.0,
          std::to_string(matched) + "/5 prediction sets match the independent search exactly, " + fmt(secs) + " s (<10)"};
}

// ---------------------------------------------------------------------------
// 8. Metric identities

Outcome metric_identities() {
  Rng rng(81);
  std::vector<std::size_t> truth;
  std::vector<std::vector<double>> perfect;
  for (int i = 0; i < 200; ++i) {
    truth.push_back(rng.below(5));
    std::vector<double> row(5, 0.0);
    row[truth.back()] = 1.0;
    perfect.push_back(row);
  }
  std::vector<std::size_t> pred;
  for (const auto& r : perfect) pred.push_back(fusion::argmax(r));
  auto cm = metrics::confusion_matrix(pred, truth, 5);
  bool diagonal = true;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) diagonal = diagonal && (i == j || cm[i][j] == 0.0);
  const double auc1 = metrics::roc_auc(perfect, truth).macro_auc;

  std::vector<std::size_t> labels;
  std::vector<std::vector<double>> random;
  for (int i = 0; i < 10000; ++i) {
    labels.push_back(rng.below(3));
    random.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
  }
  const double auc_r = metrics::roc_auc(random, labels).macro_auc;
  return {diagonal && auc1 == 1.0 && std::abs(auc_r - 0.5) <= 0.05,
          std::string("diagonal confusion ") + (diagonal ? "yes" : "no") + ", perfect macro AUC " + fmt(auc1, 17) +
              ", random macro AUC " + fmt(auc_r, 4) + " (0.5 +- 0.05)"};
}

// ---------------------------------------------------------------------------
// 9 and 11. Desk-scale end-to-end run

constexpr std::uint64_t kDeskSeed = 1;

train::ProtocolReport desk_run(const std::function<void(const std::string&)>& log) {
  auto seqs = synth::synthetic_corpus();
  auto manifest = skeleton::manifest_of(seqs, "synthetic", synth::synthetic_classes());
  cass::RenderConfig rc;
  rc.size = 56;
  auto corpus = train::build_corpus(seqs, rc, cass::AugmentationSpec::none());
  train::EvalConfig cfg;
  cfg.net.input_size = 56;
  cfg.training.batch_size = 8;
  cfg.training.max_epochs = 200;
  cfg.training.patience = 10;
  cfg.training.seed = kDeskSeed;
  cfg.log = log;
  const auto spec = synth::subject_holdout(manifest, {3, 6, 9});
  train::ProtocolReport rep;
  rep.dataset = "synthetic";
  rep.protocol = spec.protocol;
  rep.seed = kDeskSeed;
  rep.rows.push_back(train::evaluate_split(corpus, manifest, spec, cfg, "synthetic"));
  return rep;
}

struct DeskResult {
  train::ProtocolReport report;
  double seconds = 0;
  std::map<std::string, std::string> files;
};

DeskResult run_desk(const std::string& label) {
  DeskResult d;
  const auto t0 = Clock::now();
  d.report = desk_run([&](const std::string& s) { std::cerr << "[" << label << " " << fmt(seconds_since(t0), 4) << " s] " << s << '\n'; });
  d.seconds = seconds_since(t0);
  testutil::TempDir dir("acc_" + label);
  report::write_report(dir.path(), d.report);
  for (const auto& e : std::filesystem::directory_iterator(dir.path()))
    d.files[e.path().filename().string()] = testutil::read_text(e.path());
  return d;
}

Outcome desk_scale(const DeskResult& d) {
  const auto& row = d.report.rows.front();
  // HS is static in every synthetic class, so it carries no signal by construction.
  const std::vector<Part> relevant{Part::FS, Part::LL, Part::RL, Part::LH, Part::RH};
  bool all_train = true;
  std::string per_part;
  for (const auto& run : row.runs) {
    double reached = 0;
    for (const auto& h : run.history) reached = std::max(reached, h.train_accuracy);
    const bool rel = std::find(relevant.begin(), relevant.end(), run.part) != relevant.end();
    if (rel) all_train = all_train && reached == 1.0;
    per_part += " " + skeleton::part_name(run.part) + "=" + report::percent(reached) + "/" +
                report::percent(run.train_accuracy) + "@" + std::to_string(run.best_epoch) + "of" +
                std::to_string(run.history.size());
  }
  const bool sizes = row.test_samples == 9;
  const bool fused = row.fused && row.fused_accuracy >= 0.90;
  return {all_train && fused && sizes && d.seconds < 1800.0,
          "train acc peak/best@epoch:" + per_part + "; fused test " + report::percent(row.fused_accuracy) + "% on " +
              std::to_string(row.test_samples) + " held-out (>=90%), weights " + fusion::weights_str(row.weights) + ", " +
              fmt(d.seconds, 4) + " s (<1800)"};
}

Outcome determinism(const DeskResult& a, const DeskResult& b) {
  const bool text = report::report_text(a.report) == report::report_text(b.report);
  const bool table = report::table_csv(a.report) == report::table_csv(b.report);
  std::size_t differing = 0;
  for (const auto& [name, body] : a.files) {
    auto it = b.files.find(name);
    differing += it == b.files.end() || it->second != body;
  }
  differing += b.files.size() != a.files.size();
  return {text && table && differing == 0 && !a.files.empty(),
          std::to_string(a.files.size()) + " report files compared, " + std::to_string(differing) + " differ; report.txt " +
              (text ? "identical" : "DIFFERS") + ", table.csv " + (table ? "identical" : "DIFFERS")};
}

// ---------------------------------------------------------------------------
// 10. Protocol plumbing

Outcome protocol_plumbing() {
  auto msr = testutil::grid_manifest("msr", 20, 10, 3);
  auto cs = skeleton::make_splits(msr, "cross-subject");
  std::set<int> train, test;
  for (const auto& id : cs.folds.at(0).train) train.insert(msr.entry(id).subject);
  for (const auto& id : cs.folds.at(0).test) test.insert(msr.entry(id).subject);
  const bool cross = cs.folds.size() == 1 && train == std::set<int>{1, 3, 5, 7, 9} && test == std::set<int>{2, 4, 6, 8, 10};

  auto ut = testutil::grid_manifest("utkinect", 10, 10, 2);
  auto loo = skeleton::make_splits(ut, "loocv-sequence");
  bool singletons = loo.folds.size() == 200;
  for (const auto& f : loo.folds) singletons = singletons && f.test.size() == 1 && f.train.size() == 199;

  std::string subsets;
  bool eight = true;
  for (const char* tag : {"AS1", "AS2", "AS3"}) {
    auto sub = msr.subset(tag);
    std::set<int> labels;
    for (const auto& e : sub.entries) labels.insert(e.label);
    const bool ok = sub.class_names.size() == 8 && labels.size() == 8;
    eight = eight && ok;
    subsets += std::string(" ") + tag + "=" + std::to_string(labels.size());
  }
  return {cross && singletons && eight, std::string("cross-subject {1,3,5,7,9}/{2,4,6,8,10} ") + (cross ? "yes" : "no") +
                                            ", UT LOOCV folds " + std::to_string(loo.folds.size()) + ", actions per subset" +
                                            subsets};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  if (wanted.empty())
    for (int c = 1; c <= 11; ++c) wanted.insert(c);

  bool all = true;
  auto report_line = [&](int n, const Outcome& o) {
    std::cout << "criterion " << n << ": " << (o.pass ? "PASS" : "FAIL") << " - " << o.detail << std::endl;
    all = all && o.pass;
  };
  auto guarded = [&](int n, const std::function<Outcome()>& f) {
    if (!wanted.count(n)) return;
    try {
      report_line(n, f());
    } catch (const std::exception& e) {
      report_line(n, {false, std::string("exception: ") + e.what()});
    }
  };

  guarded(1, gradient_suite);
  guarded(2, stcf_shapes);
  guarded(3, attention_invariants);
  guarded(4, lstm_invariants);
  guarded(5, cass_golden);
  guarded(6, resampling);
  guarded(7, fusion_oracle);
  guarded(8, metric_identities);

  if (wanted.count(9) || wanted.count(11)) {
    try {
      const DeskResult first = run_desk("run1");
      if (wanted.count(9)) report_line(9, desk_scale(first));
      guarded(10, protocol_plumbing);
      if (wanted.count(11)) {
        const DeskResult second = run_desk("run2");
        report_line(11, determinism(first, second));
      }
    } catch (const std::exception& e) {
      if (wanted.count(9)) report_line(9, {false, std::string("exception: ") + e.what()});
      if (wanted.count(11)) report_line(11, {false, std::string("exception: ") + e.what()});
    }
  } else {
    guarded(10, protocol_plumbing);
  }
  return all ? 0 : 1;
}
