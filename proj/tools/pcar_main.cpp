// pcar: V-PCC-style geometry artifact-removal toolkit.
//
// Subcommands wire the core modules into reproducible experiments:
//   simulate  degrade a cloud with axis-aligned quantization noise
//   sample    cut noisy/clean cube patch pairs for training
//   train     fit the sparse U-Net on a patch set
//   denoise   sample -> infer -> aggregate a noisy cloud
//   eval      D1/Hausdorff PSNR + Chamfer metrics CSV
//   bdrate    Bjontegaard delta rate between two rate curves
//   sweep-c   denoise+eval across overlap factors (quality/time trade-off)
//
// Every command is deterministic given explicit seeds and exits nonzero with
// a one-line diagnostic on error. File outputs are atomic.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pcar/bdrate.hpp"
#include "pcar/checkpoint.hpp"
#include "pcar/config_file.hpp"
#include "pcar/metrics.hpp"
#include "pcar/noise_sim.hpp"
#include "pcar/pipeline.hpp"
#include "pcar/ply_io.hpp"
#include "pcar/sampler.hpp"
#include "pcar/text_io.hpp"
#include "pcar/trainer.hpp"
#include "pcar/unet.hpp"

namespace {

using namespace pcar;

// Config file keys shared by the commands; flags override the file.
const std::set<std::string> kConfigKeys = {
    "k",     "C",     "cube_side", "min_points", "depth", "base_channels",
    "head_mode", "lr", "steps",    "batch",      "seed",  "peak",
    "workers"};

ConfigMap load_config(const std::string& path) {
  if (path.empty()) return {};
  ConfigMap cfg = read_config_file(path);
  check_known_keys(cfg, kConfigKeys, path);
  return cfg;
}

PlyFormat parse_format(const std::string& name) {
  if (name == "ascii") return PlyFormat::Ascii;
  if (name == "binary") return PlyFormat::BinaryLittleEndian;
  throw std::runtime_error("unknown PLY format '" + name +
                           "' (expected ascii or binary)");
}

struct SamplerFlags {
  std::optional<std::size_t> k;
  std::optional<std::size_t> overlap_c;
  std::optional<double> cube_side;
  std::optional<std::size_t> min_points;
  std::size_t seed_index = 0;

  void add_to(CLI::App* sub) {
    sub->add_option("--k", k, "target mean points per patch");
    sub->add_option("-C,--overlap", overlap_c, "mean patch overlap per point");
    sub->add_option("--cube-side", cube_side, "cube side L in voxels (default: derived)");
    sub->add_option("--min-points", min_points, "drop patches thinner than this");
    sub->add_option("--seed-index", seed_index, "first FPS pick");
  }

  SamplerConfig resolve(const ConfigMap& cfg) const {
    SamplerConfig s;
    s.k = k.value_or(static_cast<std::size_t>(get_int(cfg, "k", static_cast<std::int64_t>(s.k))));
    s.overlap_c = overlap_c.value_or(
        static_cast<std::size_t>(get_int(cfg, "C", static_cast<std::int64_t>(s.overlap_c))));
    if (cube_side) {
      s.cube_side = *cube_side;
    } else if (const double cs = get_double(cfg, "cube_side", 0.0); cs > 0.0) {
      s.cube_side = cs;
    }
    s.min_points = min_points.value_or(static_cast<std::size_t>(
        get_int(cfg, "min_points", static_cast<std::int64_t>(s.min_points))));
    s.seed_index = seed_index;
    return s;
  }
};

struct NetFlags {
  std::optional<int> depth;
  std::optional<int> base_channels;
  std::optional<std::string> head_mode;
  std::optional<double> lr;
  std::optional<int> steps;
  std::optional<int> batch;
  std::optional<std::uint64_t> seed;

  void add_to(CLI::App* sub) {
    sub->add_option("--depth", depth, "down/up levels");
    sub->add_option("--base-channels", base_channels, "feature width at level 0");
    sub->add_option("--head-mode", head_mode, "one_hot | soft | direct");
    sub->add_option("--lr", lr, "Adam learning rate");
    sub->add_option("--steps", steps, "optimizer steps");
    sub->add_option("--batch", batch, "patches per step");
    sub->add_option("--seed", seed, "init seed");
  }

  NetConfig resolve(const ConfigMap& cfg) const {
    NetConfig n;
    n.depth = depth.value_or(static_cast<int>(get_int(cfg, "depth", n.depth)));
    n.base_channels = base_channels.value_or(
        static_cast<int>(get_int(cfg, "base_channels", n.base_channels)));
    n.head_mode = parse_head_mode(
        head_mode.value_or(get_str(cfg, "head_mode", std::string(head_mode_name(n.head_mode)))));
    n.train.lr = lr.value_or(get_double(cfg, "lr", n.train.lr));
    n.train.steps = steps.value_or(static_cast<int>(get_int(cfg, "steps", n.train.steps)));
    n.train.batch = batch.value_or(static_cast<int>(get_int(cfg, "batch", n.train.batch)));
    n.train.seed = seed.value_or(
        static_cast<std::uint64_t>(get_int(cfg, "seed", static_cast<std::int64_t>(n.train.seed))));
    return n;
  }
};

int resolve_workers(std::optional<int> flag, const ConfigMap& cfg) {
  return flag.value_or(static_cast<int>(get_int(cfg, "workers", 0)));
}

double resolve_peak(std::optional<double> flag, const ConfigMap& cfg) {
  return flag.value_or(get_double(cfg, "peak", kDefaultPeak));
}

void cmd_simulate(const std::string& in, const std::string& out,
                  const NoiseConfig& ncfg, std::string manifest,
                  PlyFormat format) {
  const PointCloud cloud = read_ply(in);
  NoiseStats stats;
  const PointCloud noisy = inject_noise(cloud, ncfg, &stats);
  write_ply(noisy, out, format);
  if (manifest.empty()) manifest = out + ".manifest.txt";
  write_noise_manifest(manifest, stats);
  std::printf("wrote %s (%zu -> %zu points), manifest %s\n", out.c_str(),
              stats.points_in, stats.points_out, manifest.c_str());
}

void cmd_sample(const std::string& noisy_path, const std::string& clean_path,
                const std::string& outdir, const SamplerConfig& scfg) {
  const PointCloud noisy = read_ply(noisy_path);
  const PointCloud clean = read_ply(clean_path);
  const SampleResult res = sample_patch_pairs(noisy, clean, scfg);
  write_patch_set(outdir, res.pairs, res.side);
  std::printf("wrote %zu pairs to %s (requested %zu, skipped %zu thin, side %s)\n",
              res.pairs.size(), outdir.c_str(), res.requested, res.skipped_thin,
              format_double(res.side).c_str());
}

void cmd_train(const std::string& manifest, const std::string& out_ckpt,
               const NetConfig& ncfg, std::string loss_csv) {
  const std::vector<PatchPair> pairs = read_patch_set(manifest);
  Network net(ncfg);
  const TrainResult result = train(net, pairs);
  save_checkpoint(out_ckpt, net);
  if (loss_csv.empty()) loss_csv = out_ckpt + ".loss.csv";
  write_loss_csv(loss_csv, result.losses);
  if (result.losses.empty()) {
    std::printf("trained 0 steps on %zu pairs; wrote %s\n", pairs.size(),
                out_ckpt.c_str());
  } else {
    std::printf("trained %zu steps on %zu pairs, loss %s -> %s; wrote %s\n",
                result.losses.size(), pairs.size(),
                format_double(result.losses.front()).c_str(),
                format_double(result.losses.back()).c_str(), out_ckpt.c_str());
  }
}

void cmd_denoise(const std::string& noisy_path, const std::string& ckpt,
                 const std::string& out, const PipelineConfig& pcfg,
                 PlyFormat format) {
  const Network net = load_checkpoint(ckpt);
  const PointCloud noisy = read_ply(noisy_path);
  DenoiseStats stats;
  const PointCloud cleaned = denoise_cloud(net, noisy, pcfg, &stats);
  write_ply(cleaned, out, format);
  std::printf("N=%zu used=%zu covered=%zu/%zu seconds=%s\n",
              stats.requested_patches, stats.used_patches, stats.covered_points,
              noisy.size(), format_double(stats.seconds).c_str());
  std::printf("wrote %s\n", out.c_str());
}

void cmd_eval(const std::string& test_path, const std::string& ref_path,
              double peak, double rate, std::string name,
              const std::string& out_csv) {
  if (name.empty()) name = std::filesystem::path(test_path).stem().string();
  const MetricsReport report =
      evaluate_clouds(name, read_ply(test_path), read_ply(ref_path), peak, rate);
  const std::string csv = metrics_csv({&report, 1});
  if (!out_csv.empty()) write_text_atomic(out_csv, csv);
  std::fputs(csv.c_str(), stdout);
}

void cmd_bdrate(const std::string& anchor_csv, const std::string& test_csv) {
  const double percent = bd_rate(read_rd_csv(anchor_csv), read_rd_csv(test_csv));
  std::printf("%s\n", format_double(percent).c_str());
}

void cmd_sweep_c(const std::string& noisy_path, const std::string& clean_path,
                 const std::string& ckpt, const std::vector<std::size_t>& c_list,
                 PipelineConfig pcfg, double peak, const std::string& out_csv) {
  const Network net = load_checkpoint(ckpt);
  const PointCloud noisy = read_ply(noisy_path);
  const PointCloud clean = read_ply(clean_path);

  std::string csv = "C,psnr_d1,seconds\n";
  for (const std::size_t c : c_list) {
    pcfg.sampler.overlap_c = c;
    DenoiseStats stats;
    const PointCloud cleaned = denoise_cloud(net, noisy, pcfg, &stats);
    const D1Result d1 = d1_psnr(cleaned, clean, peak);
    csv += std::to_string(c) + ',' + format_double(d1.psnr) + ',' +
           format_double(stats.seconds) + '\n';
  }
  if (!out_csv.empty()) write_text_atomic(out_csv, csv);
  std::fputs(csv.c_str(), stdout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"V-PCC geometry artifact removal toolkit"};
  app.require_subcommand(1);

  try {
    // simulate ---------------------------------------------------------
    {
      auto* sub = app.add_subcommand("simulate", "inject axis-aligned quantization noise");
      auto in = std::make_shared<std::string>();
      auto out = std::make_shared<std::string>();
      auto ncfg = std::make_shared<NoiseConfig>();
      auto axis_mode = std::make_shared<std::string>("normal_based");
      auto keep_dups = std::make_shared<bool>(false);
      auto manifest = std::make_shared<std::string>();
      auto format = std::make_shared<std::string>("binary");
      sub->add_option("input", *in, "clean PLY")->required();
      sub->add_option("output", *out, "degraded PLY")->required();
      sub->add_option("--qstep", ncfg->qstep, "quantization step (>= 1)");
      sub->add_option("--seed", ncfg->seed, "axis fallback / random-mode seed");
      sub->add_option("--axis-mode", *axis_mode, "normal_based | random");
      sub->add_option("--neighbors", ncfg->neighbors, "PCA neighborhood size");
      sub->add_flag("--keep-duplicates", *keep_dups, "skip duplicate collapse");
      sub->add_option("--manifest", *manifest, "manifest path (default <output>.manifest.txt)");
      sub->add_option("--format", *format, "ascii | binary");
      sub->callback([=]() {
        NoiseConfig cfg = *ncfg;
        cfg.axis_mode = parse_axis_mode(*axis_mode);
        cfg.drop_duplicates = !*keep_dups;
        cmd_simulate(*in, *out, cfg, *manifest, parse_format(*format));
      });
    }

    // sample -----------------------------------------------------------
    {
      auto* sub = app.add_subcommand("sample", "cut noisy/clean training patch pairs");
      auto noisy = std::make_shared<std::string>();
      auto clean = std::make_shared<std::string>();
      auto outdir = std::make_shared<std::string>();
      auto config = std::make_shared<std::string>();
      auto flags = std::make_shared<SamplerFlags>();
      sub->add_option("noisy", *noisy, "degraded PLY")->required();
      sub->add_option("clean", *clean, "ground-truth PLY")->required();
      sub->add_option("outdir", *outdir, "patch set directory")->required();
      sub->add_option("--config", *config, "key = value config file");
      flags->add_to(sub);
      sub->callback([=]() {
        cmd_sample(*noisy, *clean, *outdir, flags->resolve(load_config(*config)));
      });
    }

    // train --------------------------------------------------------------
    {
      auto* sub = app.add_subcommand("train", "fit the network on a patch set");
      auto manifest = std::make_shared<std::string>();
      auto out = std::make_shared<std::string>();
      auto config = std::make_shared<std::string>();
      auto loss_csv = std::make_shared<std::string>();
      auto flags = std::make_shared<NetFlags>();
      sub->add_option("pairs", *manifest, "patch set manifest")->required();
      sub->add_option("checkpoint", *out, "output checkpoint")->required();
      sub->add_option("--config", *config, "key = value config file");
      sub->add_option("--loss-csv", *loss_csv, "loss log (default <checkpoint>.loss.csv)");
      flags->add_to(sub);
      sub->callback([=]() {
        cmd_train(*manifest, *out, flags->resolve(load_config(*config)), *loss_csv);
      });
    }

    // denoise ------------------------------------------------------------
    {
      auto* sub = app.add_subcommand("denoise", "remove artifacts from a noisy cloud");
      auto noisy = std::make_shared<std::string>();
      auto ckpt = std::make_shared<std::string>();
      auto out = std::make_shared<std::string>();
      auto config = std::make_shared<std::string>();
      auto flags = std::make_shared<SamplerFlags>();
      auto workers = std::make_shared<std::optional<int>>();
      auto format = std::make_shared<std::string>("binary");
      sub->add_option("noisy", *noisy, "degraded PLY")->required();
      sub->add_option("checkpoint", *ckpt, "trained checkpoint")->required();
      sub->add_option("output", *out, "cleaned PLY")->required();
      sub->add_option("--config", *config, "key = value config file");
      flags->add_to(sub);
      sub->add_option("--workers", *workers, "parallel patch workers (0 = all cores)");
      sub->add_option("--format", *format, "ascii | binary");
      sub->callback([=]() {
        const ConfigMap cfg = load_config(*config);
        PipelineConfig pcfg;
        pcfg.sampler = flags->resolve(cfg);
        pcfg.workers = resolve_workers(*workers, cfg);
        cmd_denoise(*noisy, *ckpt, *out, pcfg, parse_format(*format));
      });
    }

    // eval ---------------------------------------------------------------
    {
      auto* sub = app.add_subcommand("eval", "D1/Hausdorff PSNR and Chamfer metrics");
      auto test = std::make_shared<std::string>();
      auto ref = std::make_shared<std::string>();
      auto config = std::make_shared<std::string>();
      auto peak = std::make_shared<std::optional<double>>();
      auto rate = std::make_shared<double>(0.0);
      auto name = std::make_shared<std::string>();
      auto out_csv = std::make_shared<std::string>();
      sub->add_option("test", *test, "cloud under test")->required();
      sub->add_option("ref", *ref, "reference cloud")->required();
      sub->add_option("--config", *config, "key = value config file");
      sub->add_option("--peak", *peak, "PSNR peak (default 1023)");
      sub->add_option("--rate", *rate, "bits per point for the CSV row");
      sub->add_option("--name", *name, "row name (default test file stem)");
      sub->add_option("--out", *out_csv, "also write the CSV here");
      sub->callback([=]() {
        cmd_eval(*test, *ref, resolve_peak(*peak, load_config(*config)), *rate,
                 *name, *out_csv);
      });
    }

    // bdrate -------------------------------------------------------------
    {
      auto* sub = app.add_subcommand("bdrate", "Bjontegaard delta rate, percent");
      auto anchor = std::make_shared<std::string>();
      auto test = std::make_shared<std::string>();
      sub->add_option("anchor", *anchor, "anchor rate/PSNR CSV")->required();
      sub->add_option("test", *test, "test rate/PSNR CSV")->required();
      sub->callback([=]() { cmd_bdrate(*anchor, *test); });
    }

    // sweep-c ------------------------------------------------------------
    {
      auto* sub = app.add_subcommand("sweep-c", "denoise+eval across overlap factors");
      auto noisy = std::make_shared<std::string>();
      auto clean = std::make_shared<std::string>();
      auto ckpt = std::make_shared<std::string>();
      auto config = std::make_shared<std::string>();
      auto c_list = std::make_shared<std::vector<std::size_t>>();
      auto flags = std::make_shared<SamplerFlags>();
      auto workers = std::make_shared<std::optional<int>>();
      auto peak = std::make_shared<std::optional<double>>();
      auto out_csv = std::make_shared<std::string>();
      sub->add_option("noisy", *noisy, "degraded PLY")->required();
      sub->add_option("clean", *clean, "ground-truth PLY")->required();
      sub->add_option("checkpoint", *ckpt, "trained checkpoint")->required();
      sub->add_option("--c-list", *c_list, "overlap factors to sweep")
          ->required()
          ->delimiter(',');
      sub->add_option("--config", *config, "key = value config file");
      flags->add_to(sub);
      sub->add_option("--workers", *workers, "parallel patch workers");
      sub->add_option("--peak", *peak, "PSNR peak");
      sub->add_option("--out", *out_csv, "also write the CSV here");
      sub->callback([=]() {
        const ConfigMap cfg = load_config(*config);
        PipelineConfig pcfg;
        pcfg.sampler = flags->resolve(cfg);
        pcfg.workers = resolve_workers(*workers, cfg);
        cmd_sweep_c(*noisy, *clean, *ckpt, *c_list, pcfg,
                    resolve_peak(*peak, cfg), *out_csv);
      });
    }

    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "pcar: error: %s\n", e.what());
    return 1;
  }
  return 0;
}
