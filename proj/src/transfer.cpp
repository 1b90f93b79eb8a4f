#include "motif/transfer.hpp"

#include <cstdio>
#include <fstream>

#include "motif/rng.hpp"
#include "motif/util.hpp"

namespace motif::transfer {

std::vector<BandRange> partition(const rfnet::FrequencyGrid& grid, int n_band) {
  if (n_band < 1) throw TransferError("partition: n_band must be >= 1");
  if (grid.points % n_band != 0)
    throw TransferError("partition: n_band " + std::to_string(n_band) +
                        " does not divide the grid point count " + std::to_string(grid.points));
  const int per = grid.points / n_band;
  const double f_max = grid.f_max_ghz();
  std::vector<BandRange> bands(n_band);
  for (int i = 0; i < n_band; ++i) {
    bands[i].band = i + 1;
    bands[i].k_start = i * per;
    bands[i].k_count = per;
    bands[i].f_lo_ghz = static_cast<double>(i) * f_max / n_band;
    bands[i].f_hi_ghz = static_cast<double>(i + 1) * f_max / n_band;
  }
  return bands;
}

Eigen::MatrixXd band_slice(const Eigen::MatrixXd& y_full, int k_total, const BandRange& band) {
  if (y_full.rows() != 12L * k_total) throw TransferError("band_slice: label rows != 12*K");
  Eigen::MatrixXd out(12L * band.k_count, y_full.cols());
  for (int n = 0; n < 12; ++n)
    out.middleRows(static_cast<Eigen::Index>(n) * band.k_count, band.k_count) =
        y_full.middleRows(static_cast<Eigen::Index>(n) * k_total + band.k_start, band.k_count);
  return out;
}

BandEnsemble run_self_transfer(const TrainData& td, const rfnet::FrequencyGrid& grid,
                               const std::vector<int>& hidden, surrogate::Activation act,
                               const TransferSchedule& schedule, std::uint64_t seed) {
  using namespace surrogate;
  if (schedule.t_iters < 1) throw TransferError("run_self_transfer: T must be >= 1");
  const auto bands = partition(grid, schedule.n_band);
  const int k_total = grid.points;

  BandEnsemble ens;
  ens.grid = grid;
  ens.schedule = schedule;
  ens.seed = seed;

  MlpSpec spec;
  spec.input_dim = static_cast<int>(td.x_train.rows());
  spec.hidden = hidden;
  spec.output_dim = 12 * bands[0].k_count;
  spec.act = act;

  std::vector<Eigen::MatrixXd> ytr(bands.size()), yval(bands.size());
  for (std::size_t i = 0; i < bands.size(); ++i) {
    ytr[i] = band_slice(td.y_train, k_total, bands[i]);
    yval[i] = band_slice(td.y_val, k_total, bands[i]);
  }

  ens.models.resize(bands.size());
  for (std::size_t i = 0; i < bands.size(); ++i) {
    auto& sb = ens.models[i];
    sb.band_index = bands[i].band;
    sb.f_lo_ghz = bands[i].f_lo_ghz;
    sb.f_hi_ghz = bands[i].f_hi_ghz;
    sb.k_start = bands[i].k_start;
    sb.k_count = bands[i].k_count;
    sb.model = init_mlp(spec, mix_seed(seed, 1000 + i));
  }

  int visit_no = 0;
  auto train_visit = [&](int t, char dir, int band1) {
    auto& sb = ens.models[band1 - 1];
    TrainConfig cfg = schedule.visit_cfg;
    cfg.seed = mix_seed(seed, static_cast<std::uint64_t>(2000 + visit_no));
    ++visit_no;
    try {
      auto res = fit(sb.model, td.x_train, ytr[band1 - 1], td.x_val, yval[band1 - 1], cfg,
                     sb.k_count);
      ens.log.push_back({t, dir, band1, res.best_val});
    } catch (const SurrogateError& e) {
      throw TransferError("self-transfer diverged at t=" + std::to_string(t) + " dir=" + dir +
                          " band=" + std::to_string(band1) + ": " + e.what());
    }
  };

  // bootstrap: fresh seeded initialization on band 1
  ens.models[0].model.norm = fit_normalizer(td.x_train, ytr[0]);
  train_visit(0, 'B', 1);

  const int nb = schedule.n_band;
  for (int t = 1; t <= schedule.t_iters; ++t) {
    for (int i = 1; i <= nb - 1; ++i) {
      init_from(ens.models[i], ens.models[i - 1], td.x_train, ytr[i]);
      train_visit(t, 'F', i + 1);
    }
    for (int i = nb - 1; i >= 1; --i) {
      init_from(ens.models[i - 1], ens.models[i], td.x_train, ytr[i - 1]);
      train_visit(t, 'R', i);
    }
  }
  ens.dataset_hash = surrogate::data_hash(td.x_train);
  return ens;
}

Eigen::MatrixXd predict_full_batch(const BandEnsemble& e, const Eigen::MatrixXd& x) {
  const int k_total = e.grid.points;
  Eigen::MatrixXd out(12L * k_total, x.cols());
  for (const auto& sb : e.models) {
    const Eigen::MatrixXd pred = sb.model.forward_batch(x);
    for (int n = 0; n < 12; ++n)
      out.middleRows(static_cast<Eigen::Index>(n) * k_total + sb.k_start, sb.k_count) =
          pred.middleRows(static_cast<Eigen::Index>(n) * sb.k_count, sb.k_count);
  }
  return out;
}

Eigen::VectorXd predict_full(const BandEnsemble& e, const Eigen::VectorXd& x) {
  return predict_full_batch(e, x);
}

void save_ensemble(const BandEnsemble& e, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  char name[64];
  for (std::size_t i = 0; i < e.models.size(); ++i) {
    const auto& sb = e.models[i];
    std::snprintf(name, sizeof(name), "band_%02d.motifmodel", sb.band_index);
    char lo[32], hi[32];
    std::snprintf(lo, sizeof(lo), "%.17g", sb.f_lo_ghz);
    std::snprintf(hi, sizeof(hi), "%.17g", sb.f_hi_ghz);
    surrogate::save_model(sb.model, dir / name,
                          {{"band_index", std::to_string(sb.band_index)},
                           {"k_start", std::to_string(sb.k_start)},
                           {"k_count", std::to_string(sb.k_count)},
                           {"f_lo_ghz", lo},
                           {"f_hi_ghz", hi}});
  }
  std::ofstream man(dir / "ensemble.manifest");
  if (!man) throw TransferError("save_ensemble: cannot open manifest");
  char buf[64];
  man << "MOTIF ensemble manifest\n";
  man << "nband=" << e.schedule.n_band << "\n";
  man << "titer=" << e.schedule.t_iters << "\n";
  man << "seed=" << e.seed << "\n";
  man << "dataset_hash=" << to_hex(e.dataset_hash) << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", e.grid.f_start_ghz);
  man << "f_start_ghz=" << buf << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", e.grid.f_step_ghz);
  man << "f_step_ghz=" << buf << "\n";
  man << "points=" << e.grid.points << "\n";
  man << "visit_epochs=" << e.schedule.visit_cfg.epochs << "\n";
  man << "visit_patience=" << e.schedule.visit_cfg.patience << "\n";
  for (const auto& v : e.log) {
    std::snprintf(buf, sizeof(buf), "%.9g", v.val_loss);
    man << "visit t=" << v.t << " dir=" << v.direction << " band=" << v.band
        << " val_loss=" << buf << "\n";
  }
}

BandEnsemble load_ensemble(const std::filesystem::path& dir) {
  BandEnsemble e;
  std::ifstream man(dir / "ensemble.manifest");
  if (!man) throw TransferError("load_ensemble: missing manifest in " + dir.string());
  std::string line;
  std::getline(man, line);
  while (std::getline(man, line)) {
    if (line.rfind("visit ", 0) == 0) {
      Visit v;
      std::string rest = line.substr(6);
      for (auto& tok : split(rest, ' ')) {
        auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const std::string k = tok.substr(0, eq), val = tok.substr(eq + 1);
        if (k == "t") v.t = std::stoi(val);
        else if (k == "dir") v.direction = val.empty() ? '?' : val[0];
        else if (k == "band") v.band = std::stoi(val);
        else if (k == "val_loss") v.val_loss = std::stod(val);
      }
      e.log.push_back(v);
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string k = line.substr(0, eq), val = line.substr(eq + 1);
    if (k == "nband") e.schedule.n_band = std::stoi(val);
    else if (k == "titer") e.schedule.t_iters = std::stoi(val);
    else if (k == "seed") e.seed = std::stoull(val);
    else if (k == "dataset_hash") e.dataset_hash = std::stoull(val, nullptr, 16);
    else if (k == "f_start_ghz") e.grid.f_start_ghz = std::stod(val);
    else if (k == "f_step_ghz") e.grid.f_step_ghz = std::stod(val);
    else if (k == "points") e.grid.points = std::stoi(val);
    else if (k == "visit_epochs") e.schedule.visit_cfg.epochs = std::stoi(val);
    else if (k == "visit_patience") e.schedule.visit_cfg.patience = std::stoi(val);
  }
  for (int b = 1; b <= e.schedule.n_band; ++b) {
    char name[64];
    std::snprintf(name, sizeof(name), "band_%02d.motifmodel", b);
    std::map<std::string, std::string> extra;
    surrogate::SubBandModel sb;
    sb.model = surrogate::load_model(dir / name, &extra);
    sb.band_index = std::stoi(extra.at("band_index"));
    sb.k_start = std::stoi(extra.at("k_start"));
    sb.k_count = std::stoi(extra.at("k_count"));
    sb.f_lo_ghz = std::stod(extra.at("f_lo_ghz"));
    sb.f_hi_ghz = std::stod(extra.at("f_hi_ghz"));
    e.models.push_back(std::move(sb));
  }
  return e;
}

}  // namespace motif::transfer
