#pragma once
// Command implementations behind the `riac` executable.

#include <CLI11.hpp>

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "riac/archive.hpp"
#include "riac/config.hpp"
#include "riac/fusion.hpp"
#include "riac/grad_suite.hpp"
#include "riac/report.hpp"
#include "riac/skeleton_io.hpp"
#include "riac/synthetic.hpp"
#include "riac/training.hpp"

namespace riac::cli {

namespace fs = std::filesystem;
using skeleton::Part;

struct Context {
  config::RunConfig cfg;
  std::ostream& out;
  std::ostream& err;
};

inline void save_config(const fs::path& dir, const config::RunConfig& cfg) {
  fs::create_directories(dir);
  report::write_text(dir / "config.txt", cfg.dump());
}

inline const std::vector<std::string>& dataset_names() {
  static const std::vector<std::string> names = {"utkinect", "florence", "msr", "synthetic"};
  return names;
}

inline void check_dataset(const std::string& name) {
  if (std::find(dataset_names().begin(), dataset_names().end(), name) == dataset_names().end())
    throw UsageError("unknown dataset '" + name + "' (expected utkinect, florence, msr or synthetic)");
}

inline std::vector<std::string> classes_of(const std::string& dataset) {
  return dataset == "synthetic" ? synth::synthetic_classes() : skeleton::dataset_classes(dataset);
}

// ---------------------------------------------------------------------------
// Shared loading

struct Dataset {
  skeleton::DatasetManifest manifest;  // subset applied when configured
  std::vector<skeleton::ActionSequence> sequences;
};

inline Dataset load_dataset(const config::RunConfig& cfg, bool apply_subset = true) {
  const fs::path dir = cfg.corpus_dir();
  if (!fs::exists(dir / "manifest.txt")) throw IoError("no ingested corpus at '" + dir.string() + "' (run 'riac ingest' first)");
  Dataset d;
  auto full = skeleton::read_manifest(dir / "manifest.txt");
  for (const auto& e : full.entries) d.sequences.push_back(skeleton::load_sequence(dir, full, e));
  d.manifest = full;
  if (apply_subset && !cfg.get("subset").empty()) {
    if (full.dataset != "msr") throw UsageError("'subset' only applies to the msr dataset");
    d.manifest = full.subset(cfg.get("subset"));
  }
  return d;
}

inline skeleton::SplitSpec make_split(const skeleton::DatasetManifest& m, const config::RunConfig& cfg) {
  if (cfg.get("protocol") == "holdout") return synth::subject_holdout(m, cfg.test_subjects());
  return skeleton::make_splits(m, cfg.get("protocol"));
}

inline train::Corpus load_corpus(Context& ctx, const Dataset& d) {
  const fs::path dir = ctx.cfg.cass_dir();
  if (fs::exists(dir / "index.csv")) {
    auto c = train::read_corpus_images(dir, d.manifest.dataset);
    if (c.image_size != ctx.cfg.count("image_size"))
      throw UsageError("rendered images in '" + dir.string() + "' are " + std::to_string(c.image_size) +
                       " px but image_size is " + ctx.cfg.get("image_size"));
    return c;
  }
  ctx.err << "note: no rendered corpus at " << dir.string() << ", rendering in memory\n";
  return train::build_corpus(d.sequences, ctx.cfg.render(), ctx.cfg.augmentation(), ctx.cfg.count("resample_frames"));
}

inline std::vector<train::Sample> samples_of(const skeleton::DatasetManifest& m, const std::vector<std::string>& ids) {
  std::vector<train::Sample> out;
  for (const auto& id : ids) out.push_back({id, static_cast<std::size_t>(m.entry(id).label)});
  return out;
}

inline const skeleton::Fold& pick_fold(const skeleton::SplitSpec& spec, std::size_t f) {
  if (f >= spec.folds.size())
    throw DomainError("fold " + std::to_string(f) + " does not exist (protocol " + spec.protocol + " has " +
                      std::to_string(spec.folds.size()) + ")");
  return spec.folds[f];
}

inline std::string run_tag(const config::RunConfig& cfg, const std::string& part) {
  const std::string sub = cfg.get("subset");
  return (sub.empty() ? "" : sub + "_") + part + "_fold" + cfg.get("fold");
}

// ---------------------------------------------------------------------------
// Commands

inline std::vector<skeleton::ActionSequence> parse_raw(const std::string& dataset, const fs::path& raw, const config::RunConfig& cfg) {
  if (dataset == "synthetic") {
    synth::SyntheticOptions o;
    o.subjects = cfg.count("synthetic_subjects");
    o.seed = cfg.count("synthetic_seed");
    return synth::synthetic_corpus(o);
  }
  if (raw.empty()) throw UsageError("ingest " + dataset + " needs a raw dataset path");
  if (!fs::exists(raw)) throw IoError("raw dataset path '" + raw.string() + "' does not exist");
  if (dataset == "utkinect") return skeleton::parse_utkinect(raw);
  if (dataset == "florence") return skeleton::parse_florence(raw);
  return skeleton::parse_msr(raw, cfg.count("msr_rows_per_frame"));
}

inline void cmd_ingest(Context& ctx, const std::string& dataset, const std::string& raw_arg) {
  check_dataset(dataset);
  ctx.cfg.set("dataset", dataset);
  if (!raw_arg.empty()) ctx.cfg.set("raw_path", raw_arg);
  auto seqs = parse_raw(dataset, ctx.cfg.get("raw_path"), ctx.cfg);
  const fs::path dir = ctx.cfg.corpus_dir();
  auto m = skeleton::write_corpus(dir, seqs, dataset, classes_of(dataset));
  save_config(dir, ctx.cfg);
  ctx.out << dataset << ": " << seqs.size() << " sequences, " << m.class_names.size() << " classes, " << m.subject_ids().size()
          << " subjects -> " << dir.string() << '\n';
}

inline void cmd_render(Context& ctx) {
  auto d = load_dataset(ctx.cfg, false);
  const auto aug = ctx.cfg.augmentation();
  auto corpus = train::build_corpus(d.sequences, ctx.cfg.render(), aug, ctx.cfg.count("resample_frames"));
  const fs::path dir = ctx.cfg.cass_dir();
  train::write_corpus_images(dir, corpus);
  save_config(dir, ctx.cfg);
  std::size_t n = 0;
  for (const auto& [id, parts] : corpus.images)
    for (const auto& [p, pi] : parts) n += 1 + pi.augmented.size();
  ctx.out << "rendered " << n << " images (" << corpus.images.size() << " sequences x 6 parts x " << (1 + aug.transforms.size())
          << " variants) -> " << dir.string() << '\n';
}

inline void cmd_train(Context& ctx) {
  const auto& cfg = ctx.cfg;
  auto d = load_dataset(cfg);
  const auto spec = make_split(d.manifest, cfg);
  const std::size_t f = cfg.count("fold");
  const auto& fold = pick_fold(spec, f);
  const Part part = skeleton::parse_part(cfg.get("part"));
  auto corpus = load_corpus(ctx, d);
  auto tc = cfg.training();
  tc.seed = derive_seed(tc.seed, "fold", f);
  const std::string tag = run_tag(cfg, cfg.get("part"));
  auto tr = train::train_part(corpus, part, samples_of(d.manifest, fold.train), cfg.net(d.manifest.class_names.size()), tc, tag,
                              [&](const train::EpochRecord& e) {
                                ctx.err << tag << " epoch " << e.epoch << " loss " << e.train_loss << " acc " << e.train_accuracy
                                        << " val_loss " << e.val_loss << '\n';
                              });
  const fs::path dir = cfg.output_dir() / "runs" / tag;
  fs::create_directories(dir);
  auto ar = net::to_archive(tr.model);
  std::string classes;
  for (const auto& c : d.manifest.class_names) classes += (classes.empty() ? "" : ",") + c;
  ar.meta.push_back({"dataset", d.manifest.dataset});
  ar.meta.push_back({"part", cfg.get("part")});
  ar.meta.push_back({"fold", cfg.get("fold")});
  ar.meta.push_back({"classes", classes});
  ar.meta.push_back({"seed", cfg.get("seed")});
  ad::write_archive(dir / "checkpoint.riac", ar);
  train::RunRecord rec;
  rec.history = tr.history;
  report::write_history(dir / "history.csv", rec);
  save_config(dir, cfg);
  ctx.out << tag << ": " << tr.history.size() << " epochs, best " << tr.best_epoch << ", train accuracy "
          << report::percent(tr.best().train_accuracy) << "% -> " << (dir / "checkpoint.riac").string() << '\n';
}

inline void cmd_predict(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const std::string tag = run_tag(cfg, cfg.get("part"));
  const fs::path ckpt = cfg.output_dir() / "runs" / tag / "checkpoint.riac";
  if (!fs::exists(ckpt)) throw IoError("missing checkpoint: expected '" + ckpt.string() + "'");
  auto model = net::from_archive(ad::read_archive(ckpt));
  auto d = load_dataset(cfg);
  const auto spec = make_split(d.manifest, cfg);
  const auto& fold = pick_fold(spec, cfg.count("fold"));
  auto corpus = load_corpus(ctx, d);
  const Part part = skeleton::parse_part(cfg.get("part"));
  auto preds = train::predict_part(model, corpus, part, samples_of(d.manifest, fold.test), d.manifest.class_names);
  const fs::path dir = cfg.output_dir() / "predictions";
  fs::create_directories(dir);
  fusion::write_predictions(dir / (tag + ".csv"), preds);
  save_config(dir, cfg);
  ctx.out << tag << ": " << preds.size() << " test samples, accuracy "
          << report::percent(metrics::accuracy(preds.predicted(), preds.labels)) << "% -> " << (dir / (tag + ".csv")).string() << '\n';
}

inline void cmd_fuse(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const fs::path pdir = cfg.output_dir() / "predictions";
  auto load = [&](Part p) {
    const fs::path f = pdir / (run_tag(cfg, skeleton::part_name(p)) + ".csv");
    if (!fs::exists(f)) throw IoError("missing predictions: expected '" + f.string() + "'");
    return fusion::read_predictions(f);
  };
  std::vector<fusion::PartPredictions> parts;
  for (Part p : skeleton::kFusedParts) parts.push_back(load(p));
  fusion::FusionWeights w;
  std::string source;
  if (!cfg.get("weights").empty()) {
    w = fusion::parse_weights(cfg.get("weights"));
    source = "fixed";
  } else {
    w = fusion::search_weights(parts, {}, cfg.count("jobs")).weights;
    source = "searched";
  }
  const auto fused = fusion::fuse(w, parts);
  const double acc = metrics::accuracy(fused.predicted, parts.front().labels);

  std::ostringstream table;
  table << "row";
  for (Part p : skeleton::kAllParts) table << ',' << skeleton::part_name(p);
  table << ",weighted_fusion,weights\n";
  table << (cfg.get("subset").empty() ? cfg.get("dataset") : cfg.get("subset"));
  for (Part p : skeleton::kAllParts) {
    table << ',';
    if (p == Part::FS) {
      const fs::path f = pdir / (run_tag(cfg, "FS") + ".csv");
      if (fs::exists(f)) {
        auto fsp = fusion::read_predictions(f);
        table << report::percent(metrics::accuracy(fsp.predicted(), fsp.labels));
      }
      continue;
    }
    const auto& pp = parts[static_cast<std::size_t>(std::find(skeleton::kFusedParts.begin(), skeleton::kFusedParts.end(), p) -
                                                    skeleton::kFusedParts.begin())];
    table << report::percent(metrics::accuracy(pp.predicted(), pp.labels));
  }
  table << ',' << report::percent(acc) << ",\"" << fusion::weights_str(w) << "\"\n";

  const fs::path dir = cfg.output_dir() / "fusion" / run_tag(cfg, "fused");
  fs::create_directories(dir);
  report::write_text(dir / "table.csv", table.str());
  std::ostringstream txt;
  txt << "[fusion]\nweights = " << fusion::weights_str(w) << "\nweights_source = " << source << "\naccuracy = " << report::num(acc)
      << "\nsamples = " << parts.front().size() << '\n';
  report::write_text(dir / "fusion.txt", txt.str());
  save_config(dir, cfg);
  ctx.out << table.str();
}

inline train::ProtocolReport run_evaluation(Context& ctx) {
  const auto& cfg = ctx.cfg;
  auto d = load_dataset(cfg, false);
  auto corpus = load_corpus(ctx, d);
  auto ec = cfg.eval(d.manifest.class_names.size());
  ec.log = [&](const std::string& s) { ctx.err << s << '\n'; };
  const auto parts = cfg.parts();
  train::ProtocolReport rep;
  if (cfg.get("protocol") == "holdout" || d.manifest.dataset != "msr") {
    rep.dataset = d.manifest.dataset;
    rep.protocol = cfg.get("protocol");
    rep.fusion_mode = ec.fusion_mode;
    rep.seed = ec.training.seed;
    rep.rows.push_back(train::evaluate_split(corpus, d.manifest, make_split(d.manifest, cfg), ec, d.manifest.dataset, parts));
  } else {
    rep = train::evaluate_protocol(corpus, d.manifest, cfg.get("protocol"), ec, parts);
  }
  rep.config = cfg.resolved();
  return rep;
}

inline void cmd_evaluate(Context& ctx) {
  auto rep = run_evaluation(ctx);
  const fs::path dir = ctx.cfg.output_dir() / "evaluate" / (rep.dataset + "_" + rep.protocol);
  report::write_report(dir, rep);
  save_config(dir, ctx.cfg);
  ctx.out << report::table_csv(rep);
  ctx.out << "report -> " << dir.string() << '\n';
}

inline void cmd_gradcheck(Context& ctx, const std::string& scope) {
  ad::GradSuiteOptions so;
  so.eps = ctx.cfg.real("gradcheck_eps");
  so.primitive_tol = ctx.cfg.real("gradcheck_primitive_tol");
  so.composed_tol = ctx.cfg.real("gradcheck_composed_tol");
  so.composed_size = ctx.cfg.count("gradcheck_size");
  so.seed = ctx.cfg.count("seed");
  bool any = false;
  for (const auto& c : ad::gradient_cases(so)) any = any || ad::in_scope(c, scope);
  if (!any) throw UsageError("gradcheck scope '" + scope + "' matches no operation");
  auto results = ad::run_gradient_suite(scope, so);
  std::size_t failed = 0;
  ctx.out << std::left << std::setw(36) << "check" << std::setw(14) << "max_rel_err" << std::setw(10) << "tol" << "result\n";
  for (const auto& r : results) {
    ctx.out << std::left << std::setw(36) << r.name << std::setw(14) << std::setprecision(3) << std::scientific << r.max_rel_error
            << std::setw(10) << std::setprecision(0) << r.tolerance << std::defaultfloat << (r.passed ? "PASS" : "FAIL");
    if (!r.note.empty() && !r.passed) ctx.out << "  (" << r.note << ")";
    ctx.out << '\n';
    failed += !r.passed;
  }
  ctx.out << results.size() - failed << "/" << results.size() << " checks passed\n";
  if (failed) throw VerificationError(std::to_string(failed) + " gradient check(s) failed");
}

inline void cmd_report(Context& ctx, const std::string& dir) {
  if (!dir.empty()) {
    std::ifstream is(fs::path(dir) / "table.csv");
    if (!is) throw IoError("no table.csv in '" + dir + "'");
    ctx.out << is.rdbuf();
    return;
  }
  const std::string dataset = ctx.cfg.get("dataset");
  check_dataset(dataset);
  ctx.out << net::describe_architecture(ctx.cfg.net(classes_of(dataset).size()));
#ifdef RIAC_REFERENCE_DIR
  for (const char* name : {"target_results.csv", "other_methods.csv"}) {
    std::ifstream is(fs::path(RIAC_REFERENCE_DIR) / name);
    if (is) ctx.out << '\n' << name << ":\n" << is.rdbuf();
  }
#endif
}

// ---------------------------------------------------------------------------
// Entry point

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Part-wise skeleton action recognition: CASS rendering, RIAC-Net training, weighted fusion"};
  app.name("riac");
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_file;
  app.add_option("--config", config_file, "key = value configuration file (applied before --key overrides)");
  std::map<std::string, std::string> overrides;
  for (const auto& k : config::key_specs()) {
    auto* opt = app.add_option("--" + k.key, overrides[k.key], k.doc + (k.value.empty() ? "" : " [" + k.value + "]"));
    opt->group("Config keys");
  }

  std::string dataset, raw, scope = "all", report_dir;
  auto* ingest = app.add_subcommand("ingest", "parse a raw dataset into the canonical corpus");
  ingest->add_option("dataset", dataset, "utkinect | florence | msr | synthetic")->required();
  ingest->add_option("raw_path", raw, "raw dataset location");
  app.add_subcommand("render", "render CASS images for every sequence and part");
  app.add_subcommand("train", "train one part branch on one fold");
  app.add_subcommand("predict", "predict the test side of a fold with a trained branch");
  app.add_subcommand("fuse", "fuse the five part predictions of a fold");
  app.add_subcommand("evaluate", "train, predict and fuse over a whole protocol");
  auto* gc = app.add_subcommand("gradcheck", "central-difference check of every differentiable operation");
  gc->add_option("scope", scope, "all | primitives | composed | <op name>");
  auto* rep = app.add_subcommand("report", "print the architecture and reference tables, or a report table");
  rep->add_option("dir", report_dir, "report directory written by evaluate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? 0 : exit_code(ErrorKind::Usage);
  }

  try {
    Context ctx{config::RunConfig{}, out, err};
    if (!config_file.empty()) ctx.cfg.load_file(config_file);
    for (const auto& k : config::key_specs())
      if (app.count("--" + k.key)) ctx.cfg.set(k.key, overrides[k.key]);
    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "ingest") cmd_ingest(ctx, dataset, raw);
    else if (cmd == "render") cmd_render(ctx);
    else if (cmd == "train") cmd_train(ctx);
    else if (cmd == "predict") cmd_predict(ctx);
    else if (cmd == "fuse") cmd_fuse(ctx);
    else if (cmd == "evaluate") cmd_evaluate(ctx);
    else if (cmd == "gradcheck") cmd_gradcheck(ctx, scope);
    else if (cmd == "report") cmd_report(ctx, report_dir);
    return 0;
  } catch (const Error& e) {
    err << "riac: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "riac: " << e.what() << '\n';
    return exit_code(ErrorKind::Io);
  } catch (const std::exception& e) {
    err << "riac: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace riac::cli
