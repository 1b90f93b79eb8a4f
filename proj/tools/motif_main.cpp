// motif: dataset generation, surrogate training, evaluation and
// inverse design for on-chip transformer S-parameters.
#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "motif/data.hpp"
#include "motif/inverse.hpp"
#include "motif/metrics.hpp"
#include "motif/oracle.hpp"
#include "motif/rng.hpp"
#include "motif/svg.hpp"
#include "motif/transfer.hpp"
#include "motif/util.hpp"

namespace fs = std::filesystem;
using namespace motif;

namespace {

// exit codes: 0 ok, 2 usage/config, 3 numerical/data failure, 4 no feasible design
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitNoDesign = 4;

struct ExitWith {
  int code;
  std::string msg;
};

int default_workers() {
  if (const char* s = std::getenv("MOTIF_WORKERS")) {
    long v = 0;
    if (parse_long(s, v) && v > 0 && v <= 1024) return static_cast<int>(v);
  }
  return 4;
}

std::complex<double> parse_complex(const std::string& s, const std::string& what) {
  auto parts = split(trim(s), ',');
  double re = 0.0, im = 0.0;
  if (parts.size() != 2 || !parse_double(trim(parts[0]), re) || !parse_double(trim(parts[1]), im))
    throw ExitWith{kExitUsage, what + ": cannot parse '" + s +
                                   "', expected the \"re,im\" form (e.g. \"40,-50\")"};
  return {re, im};
}

geometry::Interval parse_interval(const std::string& s, const std::string& what) {
  auto parts = split(trim(s), ',');
  double lo = 0.0, hi = 0.0;
  if (parts.size() != 2 || !parse_double(trim(parts[0]), lo) || !parse_double(trim(parts[1]), hi))
    throw ExitWith{kExitUsage, what + ": cannot parse '" + s + "', expected \"lo,hi\""};
  return {lo, hi};
}

std::vector<std::pair<int, int>> parse_turn_pairs(const std::string& s) {
  std::vector<std::pair<int, int>> out;
  for (auto& tok : split(trim(s), ',')) {
    auto mn = split(trim(tok), ':');
    long m = 0, n = 0;
    if (mn.size() != 2 || !parse_long(trim(mn[0]), m) || !parse_long(trim(mn[1]), n))
      throw ExitWith{kExitUsage,
                     "--turn-pairs: cannot parse '" + tok + "', expected \"M:N[,M:N...]\""};
    out.emplace_back(static_cast<int>(m), static_cast<int>(n));
  }
  return out;
}

std::vector<int> parse_hidden(const std::string& s) {
  std::vector<int> out;
  for (auto& tok : split(trim(s), ',')) {
    long v = 0;
    if (!parse_long(trim(tok), v) || v < 1)
      throw ExitWith{kExitUsage, "--hidden: cannot parse '" + s + "', expected e.g. \"256,256\""};
    out.push_back(static_cast<int>(v));
  }
  if (out.empty()) throw ExitWith{kExitUsage, "--hidden: need at least one layer width"};
  return out;
}

geometry::XfmrTemplate parse_template(const std::string& s) {
  auto t = geometry::template_from_name(s);
  if (!t)
    throw ExitWith{kExitUsage,
                   "--template: unknown template '" + s + "' (1to1, mn, parallel, 8shape)"};
  return *t;
}

surrogate::Activation parse_activation(const std::string& s) {
  if (s == "relu") return surrogate::Activation::Relu;
  if (s == "tanh") return surrogate::Activation::Tanh;
  throw ExitWith{kExitUsage, "--activation: expected relu or tanh, got '" + s + "'"};
}


// key=value config file applied to a subcommand's options; explicit
// command-line flags win, unknown keys are rejected
void apply_config_file(CLI::App* sub, const std::string& path) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw ExitWith{kExitUsage, "cannot open config file " + path};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::string s = trim(line);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ExitWith{kExitUsage, path + ":" + std::to_string(lineno) + ": expected key=value"};
    const std::string key = trim(s.substr(0, eq));
    std::string val = trim(s.substr(eq + 1));
    if (val.size() >= 2 && ((val.front() == '"' && val.back() == '"') ||
                            (val.front() == '\'' && val.back() == '\'')))
      val = val.substr(1, val.size() - 2);
    CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (opt == nullptr || key == "config")
      throw ExitWith{kExitUsage,
                     path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'"};
    if (opt->count() == 0) {  // flags override file keys
      opt->add_result(val);
      opt->run_callback();
    }
  }
}

// resolved-config snapshot: every option of the parsed subcommand with its
// effective value (defaults included); deterministic, no timestamps
void write_snapshot(const CLI::App* cmd, const fs::path& path) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path);
  if (!out) throw ExitWith{kExitRuntime, "cannot write config snapshot " + path.string()};
  out << cmd->config_to_str(true, false);
}

struct LoadedDataset {
  oracle::Dataset ds;
  data::Split split;
};

LoadedDataset load_with_split(const std::string& path, std::uint64_t seed) {
  LoadedDataset d;
  d.ds = oracle::load_dataset(path);
  d.split = data::make_split(d.ds.size(), mix_seed(seed, 1));
  return d;
}

// checkpoint = .motifmodel file (monolithic) or ensemble directory
struct Checkpoint {
  bool is_ensemble = false;
  surrogate::MlpModel model;
  transfer::BandEnsemble ensemble;
};

Checkpoint load_checkpoint(const std::string& path) {
  Checkpoint c;
  if (fs::is_directory(path)) {
    c.is_ensemble = true;
    c.ensemble = transfer::load_ensemble(path);
  } else {
    c.model = surrogate::load_model(path);
  }
  return c;
}

Eigen::MatrixXd predict(const Checkpoint& c, const Eigen::MatrixXd& x,
                        const rfnet::FrequencyGrid& grid) {
  if (c.is_ensemble) {
    if (!(c.ensemble.grid == grid))
      throw ExitWith{kExitRuntime, "checkpoint grid does not match the dataset grid"};
    return transfer::predict_full_batch(c.ensemble, x);
  }
  if (c.model.spec.output_dim != 12 * grid.points)
    throw ExitWith{kExitRuntime, "checkpoint output size " +
                                     std::to_string(c.model.spec.output_dim) +
                                     " does not match 12*K = " + std::to_string(12 * grid.points)};
  return c.model.forward_batch(x);
}

std::uint64_t checkpoint_provenance(const Checkpoint& c) {
  return c.is_ensemble ? (c.ensemble.models.empty() ? 0 : c.ensemble.models[0].model.norm.provenance)
                       : c.model.norm.provenance;
}

double wall_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void write_loss_csv(const fs::path& path, const surrogate::FitResult& r) {
  std::ofstream out(path);
  out << "epoch,train_loss,val_loss\n";
  for (std::size_t i = 0; i < r.train_loss.size(); ++i)
    out << i << "," << r.train_loss[i] << "," << r.val_loss[i] << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"surrogate-modeling and inverse-design pipeline for on-chip RF transformers"};
  app.require_subcommand(1);
  std::function<int()> action;

  // ---- dataset gen ----------------------------------------------------
  auto* dataset = app.add_subcommand("dataset", "dataset operations")->require_subcommand(1);
  auto* gen = dataset->add_subcommand("gen", "generate a dataset with the lumped oracle");
  {
    struct {
      std::string tmpl = "mn", out = "dataset.motif1";
      int samples = 1000, points = 200, workers = default_workers();
      std::uint64_t seed = 0;
      double fstart = 0.5, fstep = 0.5;
      std::string outer_dim, trace_width, trace_spacing, winding_gap, turn_pairs;
      std::string config;
    } static o;
    gen->add_option("--config", o.config,
                    "key=value config file; flags override file keys");
    gen->add_option("--template", o.tmpl, "1to1 | mn | parallel | 8shape")->capture_default_str();
    gen->add_option("--samples", o.samples, "sample count")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    gen->add_option("--seed", o.seed, "master seed")->capture_default_str();
    gen->add_option("--out", o.out, "output dataset file")->capture_default_str();
    gen->add_option("--fstart", o.fstart, "grid start, GHz")->capture_default_str();
    gen->add_option("--fstep", o.fstep, "grid step, GHz")->capture_default_str();
    gen->add_option("--points", o.points, "grid point count")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    gen->add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
    gen->add_option("--outer-dim", o.outer_dim, "override bounds, um: \"lo,hi\"");
    gen->add_option("--trace-width", o.trace_width, "override bounds, um: \"lo,hi\"");
    gen->add_option("--trace-spacing", o.trace_spacing, "override bounds, um: \"lo,hi\"");
    gen->add_option("--winding-gap", o.winding_gap, "override bounds, um: \"lo,hi\"");
    gen->add_option("--turn-pairs", o.turn_pairs, "override allowed turns: \"M:N[,M:N...]\"");
    gen->callback([&] {
      action = [&]() -> int {
        apply_config_file(gen, o.config);
        const auto tmpl = parse_template(o.tmpl);
        auto space = geometry::ParamSpace::defaults(tmpl);
        if (!o.outer_dim.empty()) space.outer_dim_um = parse_interval(o.outer_dim, "--outer-dim");
        if (!o.trace_width.empty())
          space.trace_width_um = parse_interval(o.trace_width, "--trace-width");
        if (!o.trace_spacing.empty())
          space.trace_spacing_um = parse_interval(o.trace_spacing, "--trace-spacing");
        if (!o.winding_gap.empty())
          space.winding_gap_um = parse_interval(o.winding_gap, "--winding-gap");
        if (!o.turn_pairs.empty()) space.turn_pairs = parse_turn_pairs(o.turn_pairs);
        if (auto err = space.validate_for(tmpl); !err.empty())
          throw ExitWith{kExitUsage, "parameter space: " + err};
        rfnet::FrequencyGrid grid{o.fstart, o.fstep, o.points};

        const auto t0 = std::chrono::steady_clock::now();
        auto ds = oracle::generate_dataset(space, tmpl, o.samples, grid, o.seed, o.workers);
        oracle::save_dataset(ds, o.out);
        write_snapshot(gen, o.out + ".config");
        const double rate =
            static_cast<double>(ds.rejections) / (ds.rejections + ds.size());
        std::cout << "dataset: " << o.out << "\n"
                  << "samples: " << ds.size() << "\n"
                  << "rejection_rate: " << rate << "\n"
                  << "wall_seconds: " << wall_since(t0) << "\n";
        return 0;
      };
    });
  }

  // ---- train -----------------------------------------------------------
  auto* train = app.add_subcommand("train", "fit one monolithic full-band surrogate");
  {
    struct {
      std::string dataset, out = "train_out", hidden = "256,256,256", activation = "relu";
      int epochs = 200, patience = 20, batch = 64;
      double lr = 1e-3;
      std::uint64_t seed = 0;
      std::string config;
    } static o;
    train->add_option("--config", o.config,
                    "key=value config file; flags override file keys");
    train->add_option("--dataset", o.dataset, "MOTIF1 dataset file")
        ->required()
        ->check(CLI::ExistingFile);
    train->add_option("--out", o.out, "output directory")->capture_default_str();
    train->add_option("--hidden", o.hidden, "hidden widths, e.g. 256,256,256")
        ->capture_default_str();
    train->add_option("--activation", o.activation, "relu | tanh")->capture_default_str();
    train->add_option("--epochs", o.epochs)->check(CLI::NonNegativeNumber)->capture_default_str();
    train->add_option("--patience", o.patience)->check(CLI::PositiveNumber)->capture_default_str();
    train->add_option("--batch", o.batch)->check(CLI::PositiveNumber)->capture_default_str();
    train->add_option("--lr", o.lr)->capture_default_str();
    train->add_option("--seed", o.seed, "split/init/shuffle master seed")->capture_default_str();
    train->callback([&] {
      action = [&]() -> int {
        apply_config_file(train, o.config);
        auto d = load_with_split(o.dataset, o.seed);
        Eigen::MatrixXd xt, yt, xv, yv;
        data::to_matrices(d.ds, d.split.train, xt, yt);
        data::to_matrices(d.ds, d.split.val, xv, yv);

        surrogate::MlpSpec spec;
        spec.input_dim = geometry::kFeatureLen;
        spec.hidden = parse_hidden(o.hidden);
        spec.output_dim = 12 * d.ds.grid.points;
        spec.act = parse_activation(o.activation);
        auto m = surrogate::init_mlp(spec, mix_seed(o.seed, 2));
        m.norm = surrogate::fit_normalizer(xt, yt);

        surrogate::TrainConfig cfg;
        cfg.lr = o.lr;
        cfg.batch = o.batch;
        cfg.epochs = o.epochs;
        cfg.patience = o.patience;
        cfg.seed = mix_seed(o.seed, 3);

        const auto t0 = std::chrono::steady_clock::now();
        auto res = surrogate::fit(m, xt, yt, xv, yv, cfg, d.ds.grid.points);
        fs::create_directories(o.out);
        surrogate::save_model(m, fs::path(o.out) / "model.motifmodel",
                              {{"f_start_ghz", std::to_string(d.ds.grid.f_start_ghz)},
                               {"f_step_ghz", std::to_string(d.ds.grid.f_step_ghz)},
                               {"points", std::to_string(d.ds.grid.points)}});
        write_loss_csv(fs::path(o.out) / "loss_history.csv", res);
        write_snapshot(train, fs::path(o.out) / "resolved_config.txt");
        std::cout << "checkpoint: " << (fs::path(o.out) / "model.motifmodel").string() << "\n"
                  << "best_epoch: " << res.best_epoch << "\n"
                  << "best_val_loss: " << res.best_val << "\n"
                  << "wall_seconds: " << wall_since(t0) << "\n";
        return 0;
      };
    });
  }

  // ---- transfer ---------------------------------------------------------
  auto* xfer = app.add_subcommand("transfer", "fit a sub-band ensemble by self-transfer sweeps");
  {
    struct {
      std::string dataset, out = "transfer_out", hidden = "256,256,256", activation = "relu";
      int nband = 10, titer = 1, epochs = 30, patience = 10, batch = 64;
      double lr = 1e-3;
      std::uint64_t seed = 0;
      std::string config;
    } static o;
    xfer->add_option("--config", o.config,
                    "key=value config file; flags override file keys");
    xfer->add_option("--dataset", o.dataset, "MOTIF1 dataset file")
        ->required()
        ->check(CLI::ExistingFile);
    xfer->add_option("--out", o.out, "output directory")->capture_default_str();
    xfer->add_option("--nband", o.nband, "sub-band count")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    xfer->add_option("--titer", o.titer, "forward/backward sweep iterations T")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    xfer->add_option("--hidden", o.hidden, "per-band hidden widths")->capture_default_str();
    xfer->add_option("--activation", o.activation, "relu | tanh")->capture_default_str();
    xfer->add_option("--epochs", o.epochs, "epoch budget per visit")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    xfer->add_option("--patience", o.patience)->check(CLI::PositiveNumber)->capture_default_str();
    xfer->add_option("--batch", o.batch)->check(CLI::PositiveNumber)->capture_default_str();
    xfer->add_option("--lr", o.lr)->capture_default_str();
    xfer->add_option("--seed", o.seed, "split/init/shuffle master seed")->capture_default_str();
    xfer->callback([&] {
      action = [&]() -> int {
        apply_config_file(xfer, o.config);
        auto d = load_with_split(o.dataset, o.seed);
        if (d.ds.grid.points % o.nband != 0)
          throw ExitWith{kExitUsage, "--nband " + std::to_string(o.nband) +
                                         " does not divide the grid point count " +
                                         std::to_string(d.ds.grid.points)};
        transfer::TrainData td;
        data::to_matrices(d.ds, d.split.train, td.x_train, td.y_train);
        data::to_matrices(d.ds, d.split.val, td.x_val, td.y_val);

        transfer::TransferSchedule sched;
        sched.n_band = o.nband;
        sched.t_iters = o.titer;
        sched.visit_cfg.lr = o.lr;
        sched.visit_cfg.batch = o.batch;
        sched.visit_cfg.epochs = o.epochs;
        sched.visit_cfg.patience = o.patience;

        if (o.nband == 1)
          std::cout << "note: nband=1 degenerates to a single monolithic fit "
                       "(equivalent to 'train' with this epoch budget)\n";

        const auto t0 = std::chrono::steady_clock::now();
        auto e = transfer::run_self_transfer(td, d.ds.grid, parse_hidden(o.hidden),
                                             parse_activation(o.activation), sched, o.seed);
        const fs::path outdir(o.out);
        transfer::save_ensemble(e, outdir / "ensemble");
        {
          std::ofstream v(outdir / "visits.csv");
          v << "visit,t,direction,band,val_loss\n";
          for (std::size_t i = 0; i < e.log.size(); ++i)
            v << i << "," << e.log[i].t << "," << e.log[i].direction << "," << e.log[i].band
              << "," << e.log[i].val_loss << "\n";
        }
        write_snapshot(xfer, outdir / "resolved_config.txt");
        std::cout << "ensemble: " << (outdir / "ensemble").string() << "\n"
                  << "visits: " << e.log.size() << "\n"
                  << "final_val_loss: " << (e.log.empty() ? 0.0 : e.log.back().val_loss) << "\n"
                  << "wall_seconds: " << wall_since(t0) << "\n";
        return 0;
      };
    });
  }

  // ---- eval ---------------------------------------------------------------
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a held-out split");
  {
    struct {
      std::string dataset, checkpoint, baseline, out = "eval_out", split = "test";
      std::uint64_t seed = 0;
      std::string config;
    } static o;
    eval->add_option("--config", o.config,
                    "key=value config file; flags override file keys");
    eval->add_option("--dataset", o.dataset, "MOTIF1 dataset file")
        ->required()
        ->check(CLI::ExistingFile);
    eval->add_option("--checkpoint", o.checkpoint, ".motifmodel file or ensemble directory")
        ->required()
        ->check(CLI::ExistingPath);
    eval->add_option("--baseline", o.baseline, "optional second checkpoint to compare against")
        ->check(CLI::ExistingPath);
    eval->add_option("--split", o.split, "train | val | test")->capture_default_str();
    eval->add_option("--seed", o.seed, "split seed used at training time")->capture_default_str();
    eval->add_option("--out", o.out, "output directory")->capture_default_str();
    eval->callback([&] {
      action = [&]() -> int {
        apply_config_file(eval, o.config);
        auto d = load_with_split(o.dataset, o.seed);
        const std::vector<int>* idx = nullptr;
        if (o.split == "train") idx = &d.split.train;
        else if (o.split == "val") idx = &d.split.val;
        else if (o.split == "test") idx = &d.split.test;
        else throw ExitWith{kExitUsage, "--split: expected train, val or test"};

        Eigen::MatrixXd x, y;
        data::to_matrices(d.ds, *idx, x, y);

        auto ck = load_checkpoint(o.checkpoint);
        if (o.split != "train" && checkpoint_provenance(ck) == surrogate::data_hash(x))
          throw ExitWith{kExitRuntime,
                         "split leakage: the checkpoint was trained on exactly this split "
                         "(training-data hash matches the evaluation set)"};
        auto preds = predict(ck, x, d.ds.grid);
        auto rep = metrics::evaluate(preds, y, d.ds.grid);

        fs::create_directories(o.out);
        metrics::write_csv(rep, d.ds.grid, fs::path(o.out) / "mae_curve.csv");
        {
          std::vector<double> f(d.ds.grid.points);
          for (int k = 0; k < d.ds.grid.points; ++k) f[k] = d.ds.grid.freq_ghz(k);
          svg::LinePlot plot("S-parameter error vs frequency", "f (GHz)", "MAE");
          plot.add_series(f, rep.mae_freq_curve, "checkpoint", "#1f77b4");
          std::string cmp;
          if (!o.baseline.empty()) {
            auto bk = load_checkpoint(o.baseline);
            auto brep = metrics::evaluate(predict(bk, x, d.ds.grid), y, d.ds.grid);
            plot.add_series(f, brep.mae_freq_curve, "baseline", "#d62728");
            const double impr =
                100.0 * (brep.mae_avg_2srf - rep.mae_avg_2srf) / brep.mae_avg_2srf;
            std::ostringstream c;
            c << "--- baseline ---\n"
              << metrics::summary_text(brep) << "mae_avg_2srf_improvement_pct: " << impr << "\n";
            cmp = c.str();
            std::cout << "mae_avg_2srf_improvement_pct: " << impr << "\n";
          }
          plot.write(fs::path(o.out) / "mae_freq.svg");
          std::ofstream s(fs::path(o.out) / "summary.txt");
          s << metrics::summary_text(rep) << cmp;
        }
        write_snapshot(eval, fs::path(o.out) / "resolved_config.txt");
        std::cout << metrics::summary_text(rep);
        return 0;
      };
    });
  }

  // ---- invdesign ------------------------------------------------------------
  auto* inv = app.add_subcommand("invdesign", "CMA-ES impedance-matching design on a surrogate");
  {
    struct {
      std::string ensemble, out = "invdesign_out", tmpl = "mn";
      std::string z01 = "50,0", z02 = "50,0";
      double fc = 45.0, bw = 10.0, w0 = 1.0, w1 = 1.0, w2 = 1.0, sigma0 = 0.3;
      double budget_s = 180.0;
      int rho = 1, m = 1, n = 1, workers = default_workers(), restarts = 1;
      long evals = 4000;
      std::uint64_t seed = 0;
      std::string outer_dim, trace_width, trace_spacing, winding_gap;
      std::string config;
    } static o;
    inv->add_option("--config", o.config,
                    "key=value config file; flags override file keys");
    inv->add_option("--ensemble", o.ensemble, "trained ensemble directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    inv->add_option("--out", o.out, "output directory")->capture_default_str();
    inv->add_option("--template", o.tmpl, "geometry template")->capture_default_str();
    inv->add_option("--m", o.m, "primary turns")->check(CLI::PositiveNumber)->capture_default_str();
    inv->add_option("--n", o.n, "secondary turns")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    inv->add_option("--z01", o.z01, "source impedance \"re,im\"")->capture_default_str();
    inv->add_option("--z02", o.z02, "load impedance \"re,im\"")->capture_default_str();
    inv->add_option("--fc", o.fc, "center frequency, GHz")->capture_default_str();
    inv->add_option("--bw", o.bw, "window bandwidth, GHz")->capture_default_str();
    inv->add_option("--rho", o.rho, "window shape index")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    inv->add_option("--w0", o.w0, "area weight per mm^2")->capture_default_str();
    inv->add_option("--w1", o.w1, "reflection weight")->capture_default_str();
    inv->add_option("--w2", o.w2, "loss weight")->capture_default_str();
    inv->add_option("--evals", o.evals, "CMA-ES evaluation budget")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    inv->add_option("--sigma0", o.sigma0, "initial step, fraction of box width")
        ->capture_default_str();
    inv->add_option("--restarts", o.restarts,
                    "independent CMA runs, best oracle-verified design kept")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    inv->add_option("--budget-s", o.budget_s, "advisory wall-clock budget, seconds")
        ->capture_default_str();
    inv->add_option("--seed", o.seed)->capture_default_str();
    inv->add_option("--workers", o.workers, "objective evaluation threads")
        ->check(CLI::PositiveNumber);
    inv->add_option("--outer-dim", o.outer_dim, "design box override, um: \"lo,hi\"");
    inv->add_option("--trace-width", o.trace_width, "design box override, um: \"lo,hi\"");
    inv->add_option("--trace-spacing", o.trace_spacing, "design box override, um: \"lo,hi\"");
    inv->add_option("--winding-gap", o.winding_gap, "design box override, um: \"lo,hi\"");
    inv->callback([&] {
      action = [&]() -> int {
        apply_config_file(inv, o.config);
        const auto tmpl = parse_template(o.tmpl);
        auto ensemble = transfer::load_ensemble(o.ensemble);

        inverse::MatchTarget target;
        target.z01 = parse_complex(o.z01, "--z01");
        target.z02 = parse_complex(o.z02, "--z02");
        target.fc_ghz = o.fc;
        target.bw_ghz = o.bw;
        target.rho = o.rho;
        if (auto err = inverse::validate_target(target, ensemble.grid); !err.empty())
          throw ExitWith{kExitUsage, "target: " + err};

        auto box = geometry::ParamSpace::defaults(tmpl);
        if (!o.outer_dim.empty()) box.outer_dim_um = parse_interval(o.outer_dim, "--outer-dim");
        if (!o.trace_width.empty())
          box.trace_width_um = parse_interval(o.trace_width, "--trace-width");
        if (!o.trace_spacing.empty())
          box.trace_spacing_um = parse_interval(o.trace_spacing, "--trace-spacing");
        if (!o.winding_gap.empty())
          box.winding_gap_um = parse_interval(o.winding_gap, "--winding-gap");

        inverse::CostWeights w{o.w0, o.w1, o.w2};
        inverse::CmaesConfig cfg;
        cfg.max_evals = o.evals;
        cfg.sigma0 = o.sigma0;
        cfg.seed = o.seed;
        cfg.restarts = o.restarts;

        auto rep = inverse::inverse_design(target, w, tmpl, o.m, o.n, ensemble, box, cfg,
                                           o.workers);
        fs::create_directories(o.out);
        inverse::write_report(rep, ensemble.grid, o.out);
        write_snapshot(inv, fs::path(o.out) / "resolved_config.txt");
        std::cout << "surrogate_cost: " << rep.surrogate_cost << "\n"
                  << "oracle_cost: " << rep.oracle_cost << "\n"
                  << "cost_gap_frac: " << rep.cost_gap_frac << "\n"
                  << "max_gamma_gap_db: " << rep.max_gamma_gap_db << "\n"
                  << "evals: " << rep.evals << "\n"
                  << "wall_seconds: " << rep.wall_seconds << " (budget " << o.budget_s << ")\n"
                  << "success: " << (rep.success ? "yes" : "no") << "\n";
        if (!rep.success) {
          std::cerr << "no feasible design: oracle-verified in-band reflection did not reach "
                    << inverse::kSuccessGammaDb << " dB\n";
          return kExitNoDesign;
        }
        return 0;
      };
    });
  }

  // ---- export touchstone -----------------------------------------------------
  auto* exp = app.add_subcommand("export", "export artifacts")->require_subcommand(1);
  auto* ts = exp->add_subcommand("touchstone", "write one dataset sample as Touchstone .s4p");
  {
    struct {
      std::string dataset, out = "sample.s4p";
      int index = 0;
      std::string config;
    } static o;
    ts->add_option("--config", o.config,
                    "key=value config file; flags override file keys");
    ts->add_option("--dataset", o.dataset, "MOTIF1 dataset file")
        ->required()
        ->check(CLI::ExistingFile);
    ts->add_option("--index", o.index, "sample index")->capture_default_str();
    ts->add_option("--out", o.out, "output .s4p path")->capture_default_str();
    ts->callback([&] {
      action = [&]() -> int {
        apply_config_file(ts, o.config);
        auto ds = oracle::load_dataset(o.dataset);
        if (o.index < 0 || o.index >= ds.size())
          throw ExitWith{kExitUsage, "--index " + std::to_string(o.index) +
                                         " out of range, dataset has " +
                                         std::to_string(ds.size()) + " samples"};
        rfnet::touchstone_write(oracle::label_tensor(ds, o.index), o.out);
        std::cout << "touchstone: " << o.out << "\n";
        return 0;
      };
    });
  }

  try {
    app.parse(argc, argv);
    if (!action) return kExitUsage;
    return action();
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const ExitWith& e) {
    std::cerr << "error: " << e.msg << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
