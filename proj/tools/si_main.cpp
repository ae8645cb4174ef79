// Command-line front door for the speech-inversion toolkit: ground-truth
// extraction, feature computation, synthetic corpora, training, evaluation,
// inference, ablation, gradient checking and plotting.

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "si/ablate.hpp"
#include "si/checkpoint.hpp"
#include "si/csv_io.hpp"
#include "si/dataset.hpp"
#include "si/eval.hpp"
#include "si/feat_io.hpp"
#include "si/groundtruth.hpp"
#include "si/manifest.hpp"
#include "si/mel.hpp"
#include "si/model.hpp"
#include "si/modelcheck.hpp"
#include "si/svgplot.hpp"
#include "si/synth.hpp"
#include "si/trainer.hpp"
#include "si/wav_io.hpp"

namespace {

// Exit codes, also listed in --help: 0 ok, 2 usage, then per error category.
int exit_code_for(si::ErrorCategory c) {
  switch (c) {
    case si::ErrorCategory::Io: return 3;
    case si::ErrorCategory::Format: return 4;
    case si::ErrorCategory::InvalidParameter:
    case si::ErrorCategory::Config: return 5;
    case si::ErrorCategory::Shape:
    case si::ErrorCategory::Alignment:
    case si::ErrorCategory::InvalidInput:
    case si::ErrorCategory::EmptyInput:
    case si::ErrorCategory::Degenerate: return 6;
    case si::ErrorCategory::Numeric: return 7;
  }
  return 1;
}

nlohmann::json design_flags() {
  return {
      {"gru_gate_convention", "h = (1-z)*h_prev + z*candidate; reset inside candidate"},
      {"attention", "single-head scaled dot-product, residual, no positional encoding"},
      {"upsample_default", "linear interpolation (repeat mode behind a flag)"},
      {"loss_alpha_default", 0.8},
      {"nasal_si_dropout", 0.3},
      {"segment_keep_rule", "trailing piece kept if >= half segment or only piece"},
      {"ppmc_aggregation", "unweighted mean over utterances/segments"},
      {"highpass_filter", "4th-order zero-phase butterworth"},
  };
}

// Every command drops a JSON record of what ran next to its primary output.
void write_run_record(const std::string& primary_output, const std::string& command,
                      const nlohmann::json& config) {
  namespace fs = std::filesystem;
  fs::path out(primary_output);
  fs::path record = fs::is_directory(out) ? out / "run.json" : fs::path(primary_output + ".run.json");
  nlohmann::json j{
      {"command", command},
      {"config", config},
      {"toolkit_version", si::kToolkitVersion},
      {"design_flags", design_flags()},
  };
  std::ofstream f(record, std::ios::trunc);
  if (!f) si::fail(si::ErrorCategory::Io, "cannot write run record: " + record.string());
  f << j.dump(2) << "\n";
}

si::Waveform load_mono(const std::string& path) {
  const si::WavData w = si::read_wav(path);
  return w.channel(0);
}

void write_single_trajectory_csv(const std::string& path, const si::Trajectory& t) {
  si::TrajectoryTable table = si::TrajectoryTable::from_trajectories({t});
  si::write_trajectory_csv(path, table);
}

si::train::TrainConfig train_config_from(double alpha, int epochs, int patience, int batch,
                                         float lr, std::uint64_t seed, double w_oral,
                                         double w_source, bool save_opt) {
  si::train::TrainConfig cfg;
  cfg.alpha = alpha;
  cfg.max_epochs = epochs;
  cfg.patience = patience;
  cfg.batch_size = batch;
  cfg.lr = lr;
  cfg.seed = seed;
  cfg.head_weight_oral = w_oral;
  cfg.head_weight_source = w_source;
  cfg.save_optimizer = save_opt;
  return cfg;
}

si::models::ModelSpec spec_for_manifest(const si::train::Manifest& m, si::models::Arch arch,
                                        double scale, std::uint64_t seed) {
  si::models::ModelSpec spec;
  spec.arch = arch;
  spec.width_scale = scale;
  spec.seed = seed;
  if (m.feat_layers > 0) {
    spec.frontend = m.frontend.empty() ? "embed" : m.frontend;
    spec.feat_layers = m.feat_layers;
    spec.feat_dim = m.feat_dim;
  } else {
    // Fall back to probing the first utterance's feature file.
    if (m.utterances.empty()) si::fail(si::ErrorCategory::EmptyInput, "manifest has no utterances");
    const si::FeatureSequence f = si::read_feat(m.resolve(m.utterances.front().feat_path));
    spec.frontend = f.layers == 1 ? si::kMelFrontendId : "embed";
    spec.feat_layers = f.layers;
    spec.feat_dim = f.dim;
  }
  spec.set_default_channels();
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Speech-inversion toolkit: acoustics to vocal-tract trajectories.\n"
      "Exit codes: 0 ok, 2 usage, 3 io, 4 format, 5 parameter/config,\n"
      "6 input-shape/content, 7 numeric, 1 other."};
  app.require_subcommand(1);

  // ---- nasalance ----------------------------------------------------------
  auto* c_nas = app.add_subcommand("nasalance", "Velum trajectory from oral+nasal microphones");
  std::string nas_oral, nas_nasal, nas_out;
  double nas_window = 25.0, nas_highpass = 20.0;
  bool nas_neutral = false;
  c_nas->add_option("--oral", nas_oral, "oral-channel WAV")->required();
  c_nas->add_option("--nasal", nas_nasal, "nasal-channel WAV")->required();
  c_nas->add_option("-o,--out", nas_out, "output CSV")->required();
  c_nas->add_option("--window-ms", nas_window, "energy window (ms)");
  c_nas->add_option("--highpass-hz", nas_highpass, "pre-filter cutoff (Hz)");
  c_nas->add_flag("--silence-neutral", nas_neutral,
                  "silent frames map to the neutral ratio instead of holding");

  // ---- eggenv -------------------------------------------------------------
  auto* c_egg = app.add_subcommand("eggenv", "Glottal-activity envelope from an EGG channel");
  std::string egg_in, egg_out;
  double egg_highpass = 20.0;
  c_egg->add_option("--egg", egg_in, "EGG WAV")->required();
  c_egg->add_option("-o,--out", egg_out, "output CSV")->required();
  c_egg->add_option("--highpass-hz", egg_highpass, "pre-filter cutoff (Hz)");

  // ---- featurize ----------------------------------------------------------
  auto* c_feat = app.add_subcommand("featurize", "Log-mel features (50 Hz) from a WAV");
  std::string feat_in, feat_out;
  int feat_bands = 40;
  c_feat->add_option("--wav", feat_in, "input WAV")->required();
  c_feat->add_option("-o,--out", feat_out, "output FEAT file")->required();
  c_feat->add_option("--bands", feat_bands, "mel band count");

  // ---- synth-corpus -------------------------------------------------------
  auto* c_synth = app.add_subcommand("synth-corpus", "Generate the synthetic oracle corpus");
  si::train::SyntheticSpec synth_spec;
  std::string synth_out;
  c_synth->add_option("--speakers", synth_spec.n_speakers, "speaker count");
  c_synth->add_option("--utts", synth_spec.utts_per_speaker, "utterances per speaker");
  c_synth->add_option("--seed", synth_spec.seed, "corpus seed");
  c_synth->add_option("--noise-std", synth_spec.noise_std, "feature noise std");
  c_synth->add_option("--feat-layers", synth_spec.feat_layers, "feature layer count");
  c_synth->add_option("--feat-dim", synth_spec.feat_dim, "feature dim per layer");
  c_synth->add_option("--latent-dim", synth_spec.latent_dim, "latent motion dim");
  c_synth->add_option("--train-speakers", synth_spec.train_speakers, "train split size");
  c_synth->add_option("--dev-speakers", synth_spec.dev_speakers, "dev split size");
  c_synth->add_option("--test-speakers", synth_spec.test_speakers, "test split size");
  c_synth->add_option("-o,--out", synth_out, "output directory")->required();

  // ---- train --------------------------------------------------------------
  auto* c_train = app.add_subcommand("train", "Train an architecture on a manifest");
  std::string train_arch, train_manifest, train_out;
  double train_scale = 1.0, train_alpha = 0.8, train_w1 = 0.5, train_w2 = 0.5;
  int train_epochs = 50, train_patience = 8, train_batch = 8;
  float train_lr = 5e-4f;
  std::uint64_t train_seed = 1;
  bool train_save_opt = false, train_quiet = false, train_fusion_raw = false,
       train_up_repeat = false;
  c_train->add_option("--arch", train_arch, "nasal-si | stl-si | mtl-si")->required();
  c_train->add_option("--manifest", train_manifest, "corpus manifest JSON")->required();
  c_train->add_option("-o,--out", train_out, "output checkpoint")->required();
  c_train->add_option("--scale", train_scale, "width scale (1 = full size)");
  c_train->add_option("--seed", train_seed, "init/shuffle/dropout seed");
  c_train->add_option("--epochs", train_epochs, "max epochs");
  c_train->add_option("--patience", train_patience, "early-stopping patience");
  c_train->add_option("--batch", train_batch, "utterances per batch");
  c_train->add_option("--lr", train_lr, "Adam learning rate");
  c_train->add_option("--alpha", train_alpha, "correlation-vs-RMSE blend");
  c_train->add_option("--head-weight-oral", train_w1, "MTL oral-head loss weight");
  c_train->add_option("--head-weight-source", train_w2, "MTL source-head loss weight");
  c_train->add_flag("--save-optimizer", train_save_opt, "persist Adam moments");
  c_train->add_flag("--quiet", train_quiet, "suppress per-epoch log lines");
  c_train->add_flag("--fusion-raw", train_fusion_raw, "raw (non-softmax) layer weights");
  c_train->add_flag("--upsample-repeat", train_up_repeat, "frame repetition upsampling");

  // ---- eval ---------------------------------------------------------------
  auto* c_eval = app.add_subcommand("eval", "Score a checkpoint on a manifest split");
  std::string eval_ckpt, eval_manifest, eval_out, eval_split = "test";
  double eval_seg_seconds = 0.0;
  bool eval_unseg = false;
  c_eval->add_option("--ckpt", eval_ckpt, "checkpoint file")->required();
  c_eval->add_option("--manifest", eval_manifest, "corpus manifest JSON")->required();
  c_eval->add_option("-o,--out", eval_out, "output report JSON")->required();
  c_eval->add_option("--split", eval_split, "train | dev | test");
  auto* seg_opt = c_eval->add_option("--segment-seconds", eval_seg_seconds,
                                     "segmented protocol with this segment length");
  auto* unseg_opt = c_eval->add_flag("--unsegmented", eval_unseg, "whole-utterance protocol");
  seg_opt->excludes(unseg_opt);

  // ---- infer --------------------------------------------------------------
  auto* c_infer = app.add_subcommand("infer", "Trajectories from a feature file");
  std::string infer_ckpt, infer_in, infer_out;
  c_infer->add_option("--ckpt", infer_ckpt, "checkpoint file")->required();
  c_infer->add_option("--input", infer_in, "input FEAT file")->required();
  c_infer->add_option("-o,--out", infer_out, "output CSV")->required();

  // ---- ablate -------------------------------------------------------------
  auto* c_abl = app.add_subcommand("ablate", "Source-channel ablation family");
  std::string abl_manifest, abl_out;
  double abl_scale = 0.125, abl_alpha = 0.8;
  int abl_epochs = 50, abl_patience = 8, abl_batch = 8;
  std::uint64_t abl_seed = 1;
  std::vector<std::string> abl_exclude;
  bool abl_quiet = false;
  c_abl->add_option("--manifest", abl_manifest, "corpus manifest JSON")->required();
  c_abl->add_option("-o,--out", abl_out, "output directory")->required();
  c_abl->add_option("--scale", abl_scale, "width scale");
  c_abl->add_option("--seed", abl_seed, "seed");
  c_abl->add_option("--epochs", abl_epochs, "max epochs");
  c_abl->add_option("--patience", abl_patience, "early-stopping patience");
  c_abl->add_option("--batch", abl_batch, "utterances per batch");
  c_abl->add_option("--alpha", abl_alpha, "loss blend");
  c_abl->add_option("--exclude", abl_exclude, "train only the variant without these (VP, 3SF)");
  c_abl->add_flag("--quiet", abl_quiet, "suppress per-epoch log lines");

  // ---- gradcheck ----------------------------------------------------------
  auto* c_gc = app.add_subcommand("gradcheck", "Finite-difference check of an architecture");
  std::string gc_arch = "nasal-si";
  double gc_scale = 0.125;
  std::uint64_t gc_seed = 1;
  int gc_frames = 5, gc_seqs = 2, gc_layers = 1, gc_dim = 12;
  std::string gc_out;
  c_gc->add_option("--arch", gc_arch, "nasal-si | stl-si | mtl-si");
  c_gc->add_option("--scale", gc_scale, "width scale");
  c_gc->add_option("--seed", gc_seed, "init and data seed");
  c_gc->add_option("--frames", gc_frames, "input frames");
  c_gc->add_option("--seqs", gc_seqs, "sequences in the batch");
  c_gc->add_option("--feat-layers", gc_layers, "input feature layers");
  c_gc->add_option("--feat-dim", gc_dim, "input feature dim");
  c_gc->add_option("-o,--out", gc_out, "optional JSON report");

  // ---- plot ---------------------------------------------------------------
  auto* c_plot = app.add_subcommand("plot", "SVG panels of trajectory CSVs");
  std::string plot_csv, plot_ref, plot_out;
  c_plot->add_option("--csv", plot_csv, "estimated trajectories CSV")->required();
  c_plot->add_option("--csv-ref", plot_ref, "reference trajectories CSV (dashed overlay)");
  c_plot->add_option("-o,--out", plot_out, "output SVG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*c_nas) {
      si::DualMicRecording rec{load_mono(nas_oral), load_mono(nas_nasal)};
      si::NasalanceOptions opts;
      opts.window_ms = nas_window;
      opts.highpass_hz = nas_highpass;
      opts.silence = nas_neutral ? si::SilencePolicy::Neutral : si::SilencePolicy::Hold;
      si::GroundTruthMeta meta;
      const si::Trajectory vp = si::compute_nasalance(rec, opts, &meta);
      write_single_trajectory_csv(nas_out, vp);
      for (const auto& w : meta.warnings) std::cerr << "warning: " << w << "\n";
      write_run_record(nas_out, "nasalance",
                       {{"oral", nas_oral},
                        {"nasal", nas_nasal},
                        {"out", nas_out},
                        {"window_ms", nas_window},
                        {"highpass_hz", nas_highpass},
                        {"silence", nas_neutral ? "neutral" : "hold"},
                        {"filter_order", meta.filter_order},
                        {"normalization", meta.normalization}});
    } else if (*c_egg) {
      si::GroundTruthMeta meta;
      const si::Trajectory env = si::compute_egg_envelope(load_mono(egg_in), egg_highpass, &meta);
      write_single_trajectory_csv(egg_out, env);
      for (const auto& w : meta.warnings) std::cerr << "warning: " << w << "\n";
      write_run_record(egg_out, "eggenv",
                       {{"egg", egg_in},
                        {"out", egg_out},
                        {"highpass_hz", egg_highpass},
                        {"normalization", meta.normalization}});
    } else if (*c_feat) {
      si::MelOptions opts;
      opts.bands = feat_bands;
      const si::FeatureSequence f = si::mel_frontend(load_mono(feat_in), opts);
      si::write_feat(feat_out, f);
      write_run_record(feat_out, "featurize",
                       {{"wav", feat_in},
                        {"out", feat_out},
                        {"bands", feat_bands},
                        {"frontend", si::kMelFrontendId},
                        {"frames", f.frames}});
    } else if (*c_synth) {
      si::train::synth_corpus(synth_spec, synth_out);
      write_run_record(synth_out, "synth-corpus",
                       {{"out", synth_out}, {"spec", synth_spec.to_json()}});
      std::cout << "wrote corpus: " << synth_spec.n_speakers << " speakers x "
                << synth_spec.utts_per_speaker << " utterances under " << synth_out << "\n";
    } else if (*c_train) {
      const si::train::Manifest manifest = si::train::Manifest::load(train_manifest);
      si::models::ModelSpec spec = spec_for_manifest(
          manifest, si::models::arch_from_string(train_arch), train_scale, train_seed);
      spec.fusion_raw = train_fusion_raw;
      spec.upsample_repeat = train_up_repeat;
      si::models::Model<float> model(spec);
      const si::train::TrainConfig cfg =
          train_config_from(train_alpha, train_epochs, train_patience, train_batch, train_lr,
                            train_seed, train_w1, train_w2, train_save_opt);
      si::nn::Adam<float> opt(cfg.lr);
      const si::train::TrainResult res = si::train::train_model(
          model, manifest, cfg, train_quiet ? nullptr : &std::cerr, &opt);
      si::models::CheckpointMeta meta = res.meta;
      meta.extra = design_flags();
      si::models::save_checkpoint(train_out, model, meta,
                                  train_save_opt ? &opt : nullptr);
      write_run_record(train_out, "train",
                       {{"arch", train_arch},
                        {"manifest", train_manifest},
                        {"out", train_out},
                        {"scale", train_scale},
                        {"seed", train_seed},
                        {"epochs", train_epochs},
                        {"patience", train_patience},
                        {"batch", train_batch},
                        {"lr", train_lr},
                        {"alpha", train_alpha},
                        {"head_weight_oral", train_w1},
                        {"head_weight_source", train_w2},
                        {"model_spec", spec.to_json()}});
      std::cout << "trained " << train_arch << ": best dev loss " << res.best_dev_loss
                << " at epoch " << res.meta.best_epoch << " (of " << res.meta.epochs_trained
                << ")\n";
    } else if (*c_eval) {
      if (!eval_unseg && eval_seg_seconds <= 0.0)
        si::fail(si::ErrorCategory::Config,
                 "eval needs --unsegmented or --segment-seconds <s>");
      const si::models::LoadedCheckpoint ck = si::models::load_checkpoint(eval_ckpt);
      const si::train::Manifest manifest = si::train::Manifest::load(eval_manifest);
      const si::train::Protocol proto = eval_unseg ? si::train::Protocol::Unsegmented
                                                   : si::train::Protocol::Segmented;
      const int seg_frames =
          eval_unseg ? si::train::kSegmentFrames
                     : static_cast<int>(std::lround(eval_seg_seconds * si::kTrajectoryRateHz));
      const si::train::EvalReport rep =
          si::train::evaluate_model(*ck.model, manifest, eval_split, proto, seg_frames);
      std::ofstream out(eval_out, std::ios::trunc);
      if (!out) si::fail(si::ErrorCategory::Io, "cannot write report: " + eval_out);
      out << rep.to_json().dump(2) << "\n";
      write_run_record(eval_out, "eval",
                       {{"ckpt", eval_ckpt},
                        {"manifest", eval_manifest},
                        {"out", eval_out},
                        {"split", eval_split},
                        {"protocol", si::train::to_string(proto)},
                        {"segment_seconds", eval_unseg ? 0.0 : eval_seg_seconds}});
      std::cout << rep.to_json().dump(2) << "\n";
    } else if (*c_infer) {
      const si::models::LoadedCheckpoint ck = si::models::load_checkpoint(infer_ckpt);
      const si::FeatureSequence f = si::read_feat(infer_in);
      if (f.layers != ck.spec.feat_layers || f.dim != ck.spec.feat_dim)
        si::fail(si::ErrorCategory::Config,
                 "features are " + std::to_string(f.layers) + "x" + std::to_string(f.dim) +
                     " but the checkpoint expects " + std::to_string(ck.spec.feat_layers) + "x" +
                     std::to_string(ck.spec.feat_dim));
      si::nn::Mat<float> x(f.frames, f.layers * f.dim);
      std::memcpy(x.data(), f.data.data(), sizeof(float) * f.data.size());
      const si::nn::Mat<float> y = ck.model->infer_one(x);
      std::vector<si::Trajectory> trajs;
      for (Eigen::Index c = 0; c < y.cols(); ++c) {
        si::Trajectory t;
        t.name = ck.spec.channels[static_cast<std::size_t>(c)];
        t.values.resize(static_cast<std::size_t>(y.rows()));
        for (Eigen::Index i = 0; i < y.rows(); ++i)
          t.values[static_cast<std::size_t>(i)] = static_cast<double>(y(i, c));
        trajs.push_back(std::move(t));
      }
      si::write_trajectory_csv(infer_out, si::TrajectoryTable::from_trajectories(trajs));
      write_run_record(infer_out, "infer",
                       {{"ckpt", infer_ckpt},
                        {"input", infer_in},
                        {"out", infer_out},
                        {"frames_in", f.frames},
                        {"frames_out", y.rows()}});
    } else if (*c_abl) {
      const si::train::Manifest manifest = si::train::Manifest::load(abl_manifest);
      si::models::ModelSpec base =
          spec_for_manifest(manifest, si::models::Arch::MtlSi, abl_scale, abl_seed);
      si::train::TrainConfig cfg = train_config_from(abl_alpha, abl_epochs, abl_patience,
                                                     abl_batch, 5e-4f, abl_seed, 0.5, 0.5, false);
      std::optional<std::set<std::string>> excluded;
      if (!abl_exclude.empty() || c_abl->count("--exclude") > 0)
        excluded.emplace(abl_exclude.begin(), abl_exclude.end());
      if (excluded) si::train::check_ablation_exclusions(*excluded);
      std::filesystem::create_directories(abl_out);
      const si::train::AblationResult res =
          si::train::run_ablation(manifest, base, cfg, abl_quiet ? nullptr : &std::cerr,
                                  excluded ? &*excluded : nullptr);
      {
        std::ofstream j(std::filesystem::path(abl_out) / "ablation.json", std::ios::trunc);
        if (!j) si::fail(si::ErrorCategory::Io, "cannot write ablation report under " + abl_out);
        j << res.to_json().dump(2) << "\n";
      }
      {
        std::ofstream t(std::filesystem::path(abl_out) / "ablation.txt", std::ios::trunc);
        t << res.to_table();
      }
      write_run_record(abl_out, "ablate",
                       {{"manifest", abl_manifest},
                        {"out", abl_out},
                        {"scale", abl_scale},
                        {"seed", abl_seed},
                        {"epochs", abl_epochs},
                        {"exclude", abl_exclude}});
      std::cout << res.to_table();
    } else if (*c_gc) {
      si::models::ModelSpec spec;
      spec.arch = si::models::arch_from_string(gc_arch);
      spec.width_scale = gc_scale;
      spec.seed = gc_seed;
      spec.frontend = gc_layers == 1 ? si::kMelFrontendId : "embed";
      spec.feat_layers = gc_layers;
      spec.feat_dim = gc_dim;
      spec.set_default_channels();
      const si::nn::GradCheckReport rep =
          si::models::grad_check_model(spec, gc_seed + 1, gc_frames, gc_seqs);
      const bool pass = rep.max_rel_err <= 1e-4;
      std::cout << "gradcheck " << gc_arch << " scale " << gc_scale << ": max rel err "
                << rep.max_rel_err << " at " << rep.worst_var << "[" << rep.worst_index
                << "] (analytic " << rep.analytic << ", numeric " << rep.numeric << ", "
                << rep.checked << " values) -> " << (pass ? "pass" : "FAIL") << "\n";
      if (!gc_out.empty()) {
        std::ofstream out(gc_out, std::ios::trunc);
        if (!out) si::fail(si::ErrorCategory::Io, "cannot write report: " + gc_out);
        out << nlohmann::json{{"arch", gc_arch},
                              {"scale", gc_scale},
                              {"seed", gc_seed},
                              {"max_rel_err", rep.max_rel_err},
                              {"worst_var", rep.worst_var},
                              {"checked", rep.checked},
                              {"pass", pass}}
                   .dump(2)
            << "\n";
        write_run_record(gc_out, "gradcheck",
                         {{"arch", gc_arch}, {"scale", gc_scale}, {"seed", gc_seed}});
      }
      if (!pass) return 1;
    } else if (*c_plot) {
      const si::TrajectoryTable est = si::read_trajectory_csv(plot_csv);
      std::optional<si::TrajectoryTable> ref;
      if (!plot_ref.empty()) ref = si::read_trajectory_csv(plot_ref);
      si::write_trajectory_svg(plot_out, est, ref ? &*ref : nullptr);
      write_run_record(plot_out, "plot",
                       {{"csv", plot_csv}, {"csv_ref", plot_ref}, {"out", plot_out}});
    }
  } catch (const si::Error& e) {
    std::cerr << "error: [" << si::to_string(e.category()) << "] " << e.what() << "\n";
    return exit_code_for(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: [unexpected] " << e.what() << "\n";
    return 1;
  }
  return 0;
}
