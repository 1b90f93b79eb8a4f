#include "motif/surrogate.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "motif/rng.hpp"
#include "motif/util.hpp"

namespace motif::surrogate {

const char* activation_name(Activation a) {
  return a == Activation::Relu ? "relu" : "tanh";
}

long MlpSpec::param_count() const {
  long total = 0;
  int prev = input_dim;
  for (int h : hidden) {
    total += static_cast<long>(prev) * h + h;
    prev = h;
  }
  total += static_cast<long>(prev) * output_dim + output_dim;
  return total;
}

std::uint64_t data_hash(const Eigen::MatrixXd& x) {
  return fnv1a(x.data(), sizeof(double) * static_cast<std::size_t>(x.size()));
}

Normalizer fit_normalizer(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  auto stats = [](const Eigen::MatrixXd& m, Eigen::VectorXd& mean, Eigen::VectorXd& std) {
    mean = m.rowwise().mean();
    Eigen::MatrixXd c = m.colwise() - mean;
    std = (c.array().square().rowwise().mean()).sqrt().max(1e-8);
  };
  Normalizer n;
  stats(x, n.in_mean, n.in_std);
  stats(y, n.out_mean, n.out_std);
  n.provenance = data_hash(x);
  return n;
}

namespace {

std::vector<int> layer_dims(const MlpSpec& s) {
  std::vector<int> d;
  d.push_back(s.input_dim);
  for (int h : s.hidden) d.push_back(h);
  d.push_back(s.output_dim);
  return d;
}

void check_spec(const MlpSpec& s) {
  if (s.input_dim < 1 || s.output_dim < 1)
    throw SurrogateError("MlpSpec: dimensions must be >= 1");
  for (int h : s.hidden)
    if (h < 1) throw SurrogateError("MlpSpec: hidden width must be >= 1");
}

}  // namespace

MlpModel init_mlp(const MlpSpec& spec, std::uint64_t seed) {
  check_spec(spec);
  MlpModel m;
  m.spec = spec;
  Rng rng(mix_seed(seed, 0x6d6c70ULL));
  const auto dims = layer_dims(spec);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const double scale = spec.act == Activation::Relu ? std::sqrt(2.0 / dims[l])
                                                      : std::sqrt(1.0 / dims[l]);
    Eigen::MatrixXd w(dims[l + 1], dims[l]);
    for (int i = 0; i < w.rows(); ++i)
      for (int j = 0; j < w.cols(); ++j) w(i, j) = scale * rng.normal();
    m.w.push_back(std::move(w));
    m.b.push_back(Eigen::VectorXd::Zero(dims[l + 1]));
  }
  // identity normalizer until fit
  m.norm.in_mean = Eigen::VectorXd::Zero(spec.input_dim);
  m.norm.in_std = Eigen::VectorXd::Ones(spec.input_dim);
  m.norm.out_mean = Eigen::VectorXd::Zero(spec.output_dim);
  m.norm.out_std = Eigen::VectorXd::Ones(spec.output_dim);
  return m;
}

Eigen::MatrixXd MlpModel::forward_batch(const Eigen::MatrixXd& x) const {
  if (x.rows() != spec.input_dim) throw SurrogateError("forward: input dimension mismatch");
  Eigen::MatrixXd h =
      (x.colwise() - norm.in_mean).array().colwise() / norm.in_std.array();
  const std::size_t layers = w.size();
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd a = (w[l] * h).colwise() + b[l];
    if (l + 1 < layers) {
      if (spec.act == Activation::Relu)
        h = a.array().max(0.0);
      else
        h = a.array().tanh();
    } else {
      h = std::move(a);
    }
  }
  return (h.array().colwise() * norm.out_std.array()).colwise() + norm.out_mean.array();
}

Eigen::VectorXd MlpModel::forward(const Eigen::VectorXd& x) const {
  return forward_batch(x);
}

double loss_freq(const Eigen::VectorXd& pred, const Eigen::VectorXd& label, int k_band) {
  if (pred.size() != label.size() || pred.size() != 12L * k_band)
    throw SurrogateError("loss_freq: length must be 12 * K_band");
  double sum = 0.0;
  for (int n = 0; n < 12; ++n) {
    const auto e = pred.segment(n * k_band, k_band) - label.segment(n * k_band, k_band);
    sum += std::sqrt(e.squaredNorm() / k_band);
  }
  return sum / 12.0;
}

double loss_freq_batch(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& label, int k_band) {
  if (pred.rows() != label.rows() || pred.cols() != label.cols())
    throw SurrogateError("loss_freq_batch: shape mismatch");
  double total = 0.0;
  for (Eigen::Index j = 0; j < pred.cols(); ++j)
    total += loss_freq(pred.col(j), label.col(j), k_band);
  return total / static_cast<double>(pred.cols());
}

Gradients gradients(const MlpModel& m, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                    int k_band) {
  const Eigen::Index batch = x.cols();
  if (batch < 1) throw SurrogateError("gradients: empty batch");
  if (y.rows() != m.spec.output_dim || y.rows() != 12L * k_band)
    throw SurrogateError("gradients: label dimension mismatch");

  const std::size_t layers = m.w.size();
  std::vector<Eigen::MatrixXd> h(layers + 1);
  std::vector<Eigen::MatrixXd> act(layers);  // pre-activation of hidden layers
  h[0] = (x.colwise() - m.norm.in_mean).array().colwise() / m.norm.in_std.array();
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd a = (m.w[l] * h[l]).colwise() + m.b[l];
    if (l + 1 < layers) {
      act[l] = a;
      if (m.spec.act == Activation::Relu)
        h[l + 1] = a.array().max(0.0);
      else
        h[l + 1] = a.array().tanh();
    } else {
      h[l + 1] = std::move(a);
    }
  }
  const Eigen::MatrixXd pred =
      (h[layers].array().colwise() * m.norm.out_std.array()).colwise() +
      m.norm.out_mean.array();

  // dL/dpred with the subgradient-0 convention at zero-error RMSE roots
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(pred.rows(), batch);
  double loss = 0.0;
  for (Eigen::Index j = 0; j < batch; ++j) {
    for (int n = 0; n < 12; ++n) {
      const Eigen::VectorXd e =
          pred.col(j).segment(n * k_band, k_band) - y.col(j).segment(n * k_band, k_band);
      const double rms = std::sqrt(e.squaredNorm() / k_band);
      loss += rms / 12.0;
      if (rms > 0.0)
        g.col(j).segment(n * k_band, k_band) = e / (12.0 * k_band * rms);
    }
  }
  loss /= static_cast<double>(batch);

  Gradients out;
  out.loss = loss;
  out.dw.resize(layers);
  out.db.resize(layers);
  Eigen::MatrixXd delta =
      (g.array().colwise() * m.norm.out_std.array()) / static_cast<double>(batch);
  for (std::size_t l = layers; l-- > 0;) {
    out.dw[l] = delta * h[l].transpose();
    out.db[l] = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd back = m.w[l].transpose() * delta;
      if (m.spec.act == Activation::Relu)
        delta = (act[l - 1].array() > 0.0).cast<double>() * back.array();
      else
        delta = (1.0 - act[l - 1].array().tanh().square()) * back.array();
    }
  }
  return out;
}

void round_weights_f32(MlpModel& m) {
  auto round_mat = [](Eigen::MatrixXd& a) {
    for (Eigen::Index i = 0; i < a.size(); ++i)
      a.data()[i] = static_cast<double>(static_cast<float>(a.data()[i]));
  };
  auto round_vec = [](Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i)
      v[i] = static_cast<double>(static_cast<float>(v[i]));
  };
  for (auto& w : m.w) round_mat(w);
  for (auto& b : m.b) round_vec(b);
  round_vec(m.norm.in_mean);
  round_vec(m.norm.in_std);
  round_vec(m.norm.out_mean);
  round_vec(m.norm.out_std);
}

FitResult fit(MlpModel& m, const Eigen::MatrixXd& x_train, const Eigen::MatrixXd& y_train,
              const Eigen::MatrixXd& x_val, const Eigen::MatrixXd& y_val, const TrainConfig& cfg,
              int k_band) {
  if (!(cfg.lr > 0.0) || cfg.batch < 1 || !(cfg.beta1 > 0.0 && cfg.beta1 < 1.0) ||
      !(cfg.beta2 > 0.0 && cfg.beta2 < 1.0))
    throw SurrogateError("fit: invalid train config");
  if (m.norm.provenance != 0 && m.norm.provenance != data_hash(x_train))
    throw SurrogateError("fit: normalizer was not fit on this train split (leakage guard)");

  FitResult res;
  if (cfg.epochs == 0) return res;

  const std::size_t layers = m.w.size();
  std::vector<Eigen::MatrixXd> mw(layers), vw(layers);
  std::vector<Eigen::VectorXd> mb(layers), vb(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    mw[l] = Eigen::MatrixXd::Zero(m.w[l].rows(), m.w[l].cols());
    vw[l] = mw[l];
    mb[l] = Eigen::VectorXd::Zero(m.b[l].size());
    vb[l] = mb[l];
  }

  Rng rng(mix_seed(cfg.seed, 0x666974ULL));
  const Eigen::Index n = x_train.cols();
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);

  std::vector<Eigen::MatrixXd> best_w = m.w;
  std::vector<Eigen::VectorXd> best_b = m.b;
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  int stall = 0;
  long step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with the deterministic rng
    for (Eigen::Index i = n - 1; i > 0; --i)
      std::swap(order[i], order[rng.index(static_cast<std::size_t>(i + 1))]);

    double epoch_loss = 0.0;
    Eigen::Index done = 0;
    while (done < n) {
      const Eigen::Index bsz = std::min<Eigen::Index>(cfg.batch, n - done);
      Eigen::MatrixXd xb(x_train.rows(), bsz), yb(y_train.rows(), bsz);
      for (Eigen::Index j = 0; j < bsz; ++j) {
        xb.col(j) = x_train.col(order[done + j]);
        yb.col(j) = y_train.col(order[done + j]);
      }
      auto g = gradients(m, xb, yb, k_band);
      if (!std::isfinite(g.loss))
        throw SurrogateError("fit: diverged (NaN loss) at epoch " + std::to_string(epoch));
      epoch_loss += g.loss * static_cast<double>(bsz);
      ++step;
      const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      for (std::size_t l = 0; l < layers; ++l) {
        mw[l] = cfg.beta1 * mw[l] + (1.0 - cfg.beta1) * g.dw[l];
        vw[l] = cfg.beta2 * vw[l].array() + (1.0 - cfg.beta2) * g.dw[l].array().square();
        m.w[l].array() -=
            cfg.lr * (mw[l].array() / bc1) / ((vw[l].array() / bc2).sqrt() + cfg.eps);
        mb[l] = cfg.beta1 * mb[l] + (1.0 - cfg.beta1) * g.db[l];
        vb[l] = cfg.beta2 * vb[l].array() + (1.0 - cfg.beta2) * g.db[l].array().square();
        m.b[l].array() -=
            cfg.lr * (mb[l].array() / bc1) / ((vb[l].array() / bc2).sqrt() + cfg.eps);
      }
      done += bsz;
    }
    res.train_loss.push_back(epoch_loss / static_cast<double>(n));

    const double vl = x_val.cols() > 0
                          ? loss_freq_batch(m.forward_batch(x_val), y_val, k_band)
                          : res.train_loss.back();
    if (!std::isfinite(vl))
      throw SurrogateError("fit: diverged (NaN validation loss) at epoch " +
                           std::to_string(epoch));
    res.val_loss.push_back(vl);
    if (vl < best_val) {
      best_val = vl;
      best_epoch = epoch;
      best_w = m.w;
      best_b = m.b;
      stall = 0;
    } else if (++stall > cfg.patience) {
      break;
    }
  }
  m.w = std::move(best_w);
  m.b = std::move(best_b);
  round_weights_f32(m);
  res.best_epoch = best_epoch;
  res.best_val = best_val;
  return res;
}

namespace {

std::string vec_to_text(const Eigen::VectorXd& v) {
  std::string s;
  char buf[32];
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof(buf), i ? " %.17g" : "%.17g", v[i]);
    s += buf;
  }
  return s;
}

Eigen::VectorXd vec_from_text(const std::string& s, Eigen::Index expect, const char* what) {
  auto parts = split(s, ' ');
  std::vector<double> vals;
  for (auto& p : parts) {
    if (p.empty()) continue;
    double d = 0.0;
    if (!parse_double(p, d)) throw SurrogateError(std::string("load_model: bad number in ") + what);
    vals.push_back(d);
  }
  if (expect >= 0 && static_cast<Eigen::Index>(vals.size()) != expect)
    throw SurrogateError(std::string("load_model: wrong length for ") + what);
  Eigen::VectorXd v(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) v[i] = vals[i];
  return v;
}

}  // namespace

void save_model(const MlpModel& m, const std::filesystem::path& path,
                const std::vector<std::pair<std::string, std::string>>& extra) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SurrogateError("save_model: cannot open " + path.string());
  out << "MOTIFMODEL 1\n";
  out << "input_dim=" << m.spec.input_dim << "\n";
  out << "hidden=";
  for (std::size_t i = 0; i < m.spec.hidden.size(); ++i)
    out << (i ? "," : "") << m.spec.hidden[i];
  out << "\n";
  out << "output_dim=" << m.spec.output_dim << "\n";
  out << "activation=" << activation_name(m.spec.act) << "\n";
  out << "norm_provenance=" << to_hex(m.norm.provenance) << "\n";
  out << "in_mean=" << vec_to_text(m.norm.in_mean) << "\n";
  out << "in_std=" << vec_to_text(m.norm.in_std) << "\n";
  out << "out_mean=" << vec_to_text(m.norm.out_mean) << "\n";
  out << "out_std=" << vec_to_text(m.norm.out_std) << "\n";
  for (auto& [k, v] : extra) out << k << "=" << v << "\n";

  std::vector<float> blob;
  for (std::size_t l = 0; l < m.w.size(); ++l) {
    for (Eigen::Index i = 0; i < m.w[l].rows(); ++i)
      for (Eigen::Index j = 0; j < m.w[l].cols(); ++j)
        blob.push_back(static_cast<float>(m.w[l](i, j)));
    for (Eigen::Index i = 0; i < m.b[l].size(); ++i)
      blob.push_back(static_cast<float>(m.b[l][i]));
  }
  out << "BLOB " << blob.size() * sizeof(float) << "\n";
  out.write(reinterpret_cast<const char*>(blob.data()),
            static_cast<std::streamsize>(blob.size() * sizeof(float)));
  if (!out) throw SurrogateError("save_model: write failed for " + path.string());
}

MlpModel load_model(const std::filesystem::path& path,
                    std::map<std::string, std::string>* extra) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SurrogateError("load_model: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "MOTIFMODEL 1")
    throw SurrogateError("load_model: bad header in " + path.string());
  std::map<std::string, std::string> kv;
  std::size_t blob_bytes = 0;
  while (std::getline(in, line)) {
    if (line.rfind("BLOB ", 0) == 0) {
      blob_bytes = std::stoull(line.substr(5));
      break;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw SurrogateError("load_model: bad header line: " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto need = [&](const std::string& k) -> const std::string& {
    auto it = kv.find(k);
    if (it == kv.end()) throw SurrogateError("load_model: missing key " + k);
    return it->second;
  };

  MlpModel m;
  m.spec.input_dim = std::stoi(need("input_dim"));
  m.spec.output_dim = std::stoi(need("output_dim"));
  for (auto& h : split(need("hidden"), ','))
    if (!h.empty()) m.spec.hidden.push_back(std::stoi(h));
  const std::string& act = need("activation");
  if (act == "relu") m.spec.act = Activation::Relu;
  else if (act == "tanh") m.spec.act = Activation::Tanh;
  else throw SurrogateError("load_model: unknown activation " + act);
  m.norm.provenance = std::stoull(need("norm_provenance"), nullptr, 16);
  m.norm.in_mean = vec_from_text(need("in_mean"), m.spec.input_dim, "in_mean");
  m.norm.in_std = vec_from_text(need("in_std"), m.spec.input_dim, "in_std");
  m.norm.out_mean = vec_from_text(need("out_mean"), m.spec.output_dim, "out_mean");
  m.norm.out_std = vec_from_text(need("out_std"), m.spec.output_dim, "out_std");

  if (blob_bytes != sizeof(float) * static_cast<std::size_t>(m.spec.param_count()))
    throw SurrogateError("load_model: blob size does not match spec");
  std::vector<float> blob(blob_bytes / sizeof(float));
  in.read(reinterpret_cast<char*>(blob.data()), static_cast<std::streamsize>(blob_bytes));
  if (!in) throw SurrogateError("load_model: truncated blob in " + path.string());

  const auto dims = layer_dims(m.spec);
  std::size_t pos = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Eigen::MatrixXd w(dims[l + 1], dims[l]);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = blob[pos++];
    Eigen::VectorXd b(dims[l + 1]);
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = blob[pos++];
    m.w.push_back(std::move(w));
    m.b.push_back(std::move(b));
  }
  if (extra) {
    for (auto& [k, v] : kv) {
      if (k == "input_dim" || k == "hidden" || k == "output_dim" || k == "activation" ||
          k == "norm_provenance" || k == "in_mean" || k == "in_std" || k == "out_mean" ||
          k == "out_std")
        continue;
      (*extra)[k] = v;
    }
  }
  return m;
}

void init_from(SubBandModel& dst, const SubBandModel& src, const Eigen::MatrixXd& x_train,
               const Eigen::MatrixXd& y_train_band) {
  if (!(dst.model.spec == src.model.spec))
    throw SurrogateError("init_from: sub-band model specs differ");
  dst.model.w = src.model.w;
  dst.model.b = src.model.b;
  dst.model.norm = fit_normalizer(x_train, y_train_band);
}

}  // namespace motif::surrogate
