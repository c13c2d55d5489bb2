// afe: audio emotion ensemble command-line front end.

#include "afe/bundle.hpp"
#include "afe/config.hpp"
#include "afe/corpus.hpp"
#include "afe/pipeline.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string bundle;
  std::string manifest;
};

afe::RunConfig resolve(const Common& c) {
  afe::RunConfig cfg = c.config.empty() ? afe::RunConfig{} : afe::load_config(c.config);
  if (c.seed) cfg.seed = c.seed;
  if (!c.out.empty()) cfg.out_dir = c.out;
  if (!c.manifest.empty()) cfg.manifest = c.manifest;
  cfg.validate();
  return cfg;
}

void log_line(const std::string& s) { std::cerr << "[afe] " << s << '\n'; }

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw afe::DataError("cannot write " + p.string());
  out << text;
}

int cmd_synth(const Common& c, bool demo) {
  const auto cfg = resolve(c);
  const auto seed = cfg.require_seed();
  const auto out = cfg.out_dir;
  std::filesystem::path manifest;
  if (demo) {
    afe::ToneCorpusSpec spec;
    spec.per_class = cfg.per_class;
    spec.seconds = cfg.window_seconds;
    spec.sample_rate = cfg.sample_rate;
    manifest = afe::write_tone_corpus(out, spec, seed);
  } else {
    if (cfg.music_manifest.empty() || cfg.speech_manifest.empty())
      throw afe::ConfigError("synth needs [paths] music_manifest and speech_manifest (or --demo)");
    manifest = afe::synthesize_mixtures(cfg.music_manifest, cfg.speech_manifest, out, cfg.per_class, seed,
                                        cfg.sample_rate);
  }
  std::cout << manifest.string() << '\n';
  return 0;
}

int cmd_extract(const Common& c) {
  const auto cfg = resolve(c);
  if (cfg.manifest.empty()) throw afe::ConfigError("extract needs a manifest ([paths] manifest or --manifest)");
  const auto d = afe::load_dataset(cfg.manifest, cfg.window_seconds, cfg.sample_rate);
  if (d.size() == 0) throw afe::DataError("manifest yields no segments");
  const auto table = afe::extract_table(d, cfg.features);
  std::filesystem::create_directories(cfg.out_dir);
  const auto path = cfg.out_dir / "features.csv";
  afe::write_feature_store(path, table, cfg.features);
  std::cout << path.string() << " (" << table.x.rows() << " segments x " << table.x.cols() << " features)\n";
  return 0;
}

int cmd_train(const Common& c) {
  const auto cfg = resolve(c);
  const auto seed = cfg.require_seed();
  if (cfg.manifest.empty()) throw afe::ConfigError("train needs a manifest ([paths] manifest or --manifest)");
  const auto d = afe::load_dataset(cfg.manifest, cfg.window_seconds, cfg.sample_rate);
  log_line("loaded " + std::to_string(d.size()) + " segments from " + cfg.manifest.string());
  const auto a = afe::train_from_dataset(d, cfg, seed, log_line);
  afe::write_artifacts(a, afe::feature_names(cfg.features), cfg.out_dir);
  std::cout << a.test_report.to_text();
  std::cout << "bundle: " << (cfg.out_dir / "bundle.afe").string() << '\n';
  return 0;
}

int cmd_evaluate(const Common& c) {
  if (c.bundle.empty()) throw afe::ConfigError("evaluate needs --bundle");
  const auto model = afe::load_bundle(c.bundle);
  std::filesystem::path manifest = c.manifest;
  if (manifest.empty() && !c.config.empty()) manifest = afe::load_config(c.config).manifest;
  if (manifest.empty()) throw afe::ConfigError("evaluate needs --manifest or a config with [paths] manifest");
  const auto d = afe::load_dataset(manifest, model.preproc.window_seconds, model.preproc.sample_rate);
  if (d.size() == 0) throw afe::DataError("manifest " + manifest.string() + " yields no segments");
  afe::Labels truth, pred;
  for (const auto& s : d.segments) {
    if (!s.label) throw afe::DataError("segment '" + s.source_id + "' is unlabeled");
    truth.push_back(*s.label);
    pred.push_back(model.predict(s));
  }
  const auto report = afe::evaluate(truth, pred, "ensemble", model.preproc.hash());
  if (!c.out.empty()) {
    std::filesystem::create_directories(c.out);
    write_file(std::filesystem::path(c.out) / "evaluation.txt", report.to_text());
    write_file(std::filesystem::path(c.out) / "evaluation.json", report.to_json());
  }
  std::cout << report.to_text();
  return 0;
}

int cmd_predict(const Common& c, const std::string& wav) {
  if (c.bundle.empty()) throw afe::ConfigError("predict needs --bundle");
  const auto model = afe::load_bundle(c.bundle);
  const auto w = afe::load_audio(wav, model.preproc.sample_rate);
  const auto segments = afe::segment(w, model.preproc.window_seconds, wav);
  if (segments.empty())
    throw afe::DataError(wav + " is " + std::to_string(w.duration()) + " s long, shorter than one " +
                         std::to_string(model.preproc.window_seconds) + " s window");
  afe::Labels labels;
  for (const auto& s : segments) labels.push_back(model.predict(s));
  std::ostringstream os;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double t0 = static_cast<double>(i) * model.preproc.window_seconds;
    os << i << '\t' << t0 << "s\t" << afe::to_string(labels[i]) << '\n';
  }
  const auto counts = afe::class_counts(labels);
  os << "summary:";
  for (auto e : afe::kReportOrder)
    os << ' ' << afe::to_string(e) << '=' << afe::fixed2(static_cast<double>(counts[afe::code(e)]) / labels.size());
  os << '\n';
  std::cout << os.str();
  return 0;
}

int cmd_report(const Common& c) {
  if (c.bundle.empty()) throw afe::ConfigError("report needs --bundle");
  const auto m = afe::load_bundle(c.bundle);
  std::ostringstream os;
  os << "bundle " << c.bundle << " (format version " << afe::kBundleVersion << ")\n";
  os << "window " << m.preproc.window_seconds << " s at " << m.preproc.sample_rate << " Hz, frame "
     << m.preproc.features.frames.frame_length << " hop " << m.preproc.features.frames.hop << '\n';
  os << "features kept: " << m.preproc.mask.kept_count() << " of " << m.preproc.mask.dimension() << " (stages";
  for (auto s : m.preproc.mask.survivors) os << ' ' << s;
  os << ")\n";
  os << "preprocessing hash: " << std::hex << m.preproc.hash() << std::dec << '\n';
  os << "base learners:\n";
  for (const auto& l : m.bank.learners) {
    os << "  " << l.tag << '\t';
    if (const auto* s = std::get_if<afe::SvmModel>(&l.model))
      os << "svm C=" << s->hyper.c << " gamma=" << s->hyper.gamma;
    else {
      const auto& n = std::get<afe::NnModel>(l.model);
      os << n.arch.name << " epochs=" << n.epochs_trained << " params=" << n.parameter_count();
    }
    os << '\n';
  }
  os << "meta learner: svm C=" << m.meta.hyper.c << " gamma=" << m.meta.hyper.gamma << " width " << m.meta.input_dim
     << ", trained on " << m.meta_rows.size() << " holdout rows\n\n";
  os << afe::mask_report(m.preproc.mask, afe::feature_names(m.preproc.features));
  std::cout << os.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Audio emotion ensemble: extract, train, evaluate and predict Good/Neutral/Bad"};
  app.require_subcommand(1);
  Common c;
  bool demo = false;
  std::string wav;

  auto add_common = [&](CLI::App* sub, bool seed, bool bundle) {
    sub->add_option("--config", c.config, "INI run configuration")->check(CLI::ExistingFile);
    sub->add_option("--out", c.out, "output directory");
    if (seed) sub->add_option("--seed", c.seed, "run seed (overrides [run] seed)");
    if (bundle) sub->add_option("--bundle", c.bundle, "model bundle");
  };
  auto* synth = app.add_subcommand("synth", "build a labeled corpus (public-corpus mixtures or --demo tones)");
  add_common(synth, true, false);
  synth->add_flag("--demo", demo, "generate the synthetic tone corpus instead");
  auto* extract = app.add_subcommand("extract", "write the 195-value feature store for a manifest");
  add_common(extract, false, false);
  extract->add_option("--manifest", c.manifest, "labeled manifest");
  auto* train = app.add_subcommand("train", "train the ensemble and write bundle and reports");
  add_common(train, true, false);
  train->add_option("--manifest", c.manifest, "labeled manifest");
  auto* evaluate = app.add_subcommand("evaluate", "score a bundle on a labeled manifest");
  add_common(evaluate, false, true);
  evaluate->add_option("--manifest", c.manifest, "labeled manifest");
  auto* predict = app.add_subcommand("predict", "label every window of a WAV file");
  add_common(predict, false, true);
  predict->add_option("wav", wav, "input WAV")->required();
  auto* report = app.add_subcommand("report", "describe a bundle");
  add_common(report, false, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth->parsed()) return cmd_synth(c, demo);
    if (extract->parsed()) return cmd_extract(c);
    if (train->parsed()) return cmd_train(c);
    if (evaluate->parsed()) return cmd_evaluate(c);
    if (predict->parsed()) return cmd_predict(c, wav);
    if (report->parsed()) return cmd_report(c);
  } catch (const afe::Error& e) {
    std::cerr << "afe: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "afe: unexpected failure: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
