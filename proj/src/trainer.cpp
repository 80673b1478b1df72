#include "xite/trainer.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "xite/error.hpp"
#include "xite/rng.hpp"

namespace xite {

namespace {

constexpr char kMagic[4] = {'X', 'I', 'T', 'M'};
constexpr std::uint16_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::string& what) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw ValidationError("truncated model file while reading " + what);
  return value;
}

void write_string(std::ostream& out, const std::string& s) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in, const std::string& what) {
  const auto len = read_pod<std::uint32_t>(in, what + " length");
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) throw ValidationError("truncated model file while reading " + what);
  return s;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const Eigen::VectorXd shifted = logits.array() - logits.maxCoeff();
  Eigen::VectorXd p = shifted.array().exp();
  return p / p.sum();
}

}  // namespace

HeadModel HeadModel::init(std::uint32_t d, std::uint32_t C, std::uint64_t seed) {
  HeadModel m;
  m.d = d;
  m.C = C;
  m.init_seed = seed;
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  Rng rng(Rng::mix(seed, 0x1717));
  m.W.resize(C, d);
  for (std::uint32_t i = 0; i < C; ++i) {
    for (std::uint32_t j = 0; j < d; ++j) m.W(i, j) = rng.uniform(-bound, bound);
  }
  m.b.resize(C);
  for (std::uint32_t i = 0; i < C; ++i) m.b[i] = rng.uniform(-bound, bound);
  return m;
}

HeadModel HeadModel::zeros(std::uint32_t d, std::uint32_t C) {
  HeadModel m;
  m.d = d;
  m.C = C;
  m.W = Eigen::MatrixXd::Zero(C, d);
  m.b = Eigen::VectorXd::Zero(C);
  return m;
}

TrainConfig paper_scale_preset() {
  TrainConfig cfg;
  cfg.epochs = 15;
  cfg.batch_size = 64;
  cfg.lr = 5e-6;
  cfg.momentum = 0.9;
  cfg.seed = 42;
  return cfg;
}

double loss_and_grad(const HeadModel& model, const Eigen::MatrixXd& Xb,
                     const std::vector<std::int32_t>& labels, Gradients& grads) {
  const auto n = static_cast<std::size_t>(Xb.cols());
  if (n == 0) throw ValidationError("empty batch");
  if (labels.size() != n) throw ValidationError("batch label count mismatch");
  if (Xb.rows() != model.W.cols()) throw ValidationError("batch dimension mismatch");

  grads.dW = Eigen::MatrixXd::Zero(model.W.rows(), model.W.cols());
  grads.db = Eigen::VectorXd::Zero(model.b.size());

  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::int32_t y = labels[i];
    if (y < 0 || y >= model.W.rows()) {
      throw ValidationError("label " + std::to_string(y) + " outside [0, " +
                            std::to_string(model.W.rows()) + ")");
    }
    const Eigen::VectorXd x = Xb.col(static_cast<Eigen::Index>(i));
    const Eigen::VectorXd logits = model.W * x + model.b;
    const double zmax = logits.maxCoeff();
    const double lse = zmax + std::log((logits.array() - zmax).exp().sum());
    loss += lse - logits[y];

    Eigen::VectorXd p = (logits.array() - lse).exp();
    p[y] -= 1.0;
    grads.dW.noalias() += p * x.transpose();
    grads.db += p;
  }
  const double inv = 1.0 / static_cast<double>(n);
  grads.dW *= inv;
  grads.db *= inv;
  return loss * inv;
}

TrainResult train(const Dataset& trainset, const Dataset& dev, const TrainConfig& cfg) {
  if (trainset.size() == 0) throw ValidationError("empty training set");
  if (dev.size() == 0) throw ValidationError("empty dev set");
  if (cfg.epochs == 0 || cfg.batch_size == 0 || cfg.lr <= 0.0) {
    throw ValidationError("epochs, batch size, and lr must be positive");
  }
  const std::uint32_t d = trainset.d;
  const std::uint32_t C = trainset.num_classes;

  Eigen::MatrixXd X(d, static_cast<Eigen::Index>(trainset.size()));
  std::vector<std::int32_t> y(trainset.size());
  for (std::size_t i = 0; i < trainset.size(); ++i) {
    const auto& rec = trainset.records[i];
    if (!rec.label) throw ValidationError("training record '" + rec.id + "' is unlabeled");
    y[i] = *rec.label;
    for (std::uint32_t j = 0; j < d; ++j) X(j, static_cast<Eigen::Index>(i)) = rec.vec[j];
  }

  HeadModel model = HeadModel::init(d, C, cfg.seed);
  Eigen::MatrixXd vW = Eigen::MatrixXd::Zero(C, d);
  Eigen::VectorXd vb = Eigen::VectorXd::Zero(C);

  TrainResult result;
  result.best.dev_accuracy = -1.0;
  std::uint32_t since_best = 0;

  std::vector<std::size_t> order(trainset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  Gradients grads;
  for (std::uint32_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng rng(Rng::mix(cfg.seed, 0xE000 + epoch));
    rng.shuffle(order);

    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      Eigen::MatrixXd Xb(d, static_cast<Eigen::Index>(stop - start));
      std::vector<std::int32_t> yb(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        Xb.col(static_cast<Eigen::Index>(i - start)) = X.col(static_cast<Eigen::Index>(order[i]));
        yb[i - start] = y[order[i]];
      }
      const double loss = loss_and_grad(model, Xb, yb, grads);
      if (!std::isfinite(loss)) {
        throw ComputeError("training diverged (non-finite loss) at epoch " +
                           std::to_string(epoch));
      }
      vW = cfg.momentum * vW - cfg.lr * grads.dW;
      vb = cfg.momentum * vb - cfg.lr * grads.db;
      model.W += vW;
      model.b += vb;
      epoch_loss += loss;
      ++batches;
    }
    if (!model.W.allFinite() || !model.b.allFinite()) {
      throw ComputeError("training diverged (non-finite parameters) at epoch " +
                         std::to_string(epoch));
    }

    std::size_t correct = 0;
    for (const auto& rec : dev.records) {
      if (!rec.label) throw ValidationError("dev record '" + rec.id + "' is unlabeled");
      Eigen::VectorXd x(d);
      for (std::uint32_t j = 0; j < d; ++j) x[j] = rec.vec[j];
      if (predict(model, x).first == *rec.label) ++correct;
    }
    const double dev_acc = static_cast<double>(correct) / static_cast<double>(dev.size());

    result.history.push_back({epoch, epoch_loss / static_cast<double>(batches), dev_acc});
    if (dev_acc > result.best.dev_accuracy) {
      result.best.epoch = epoch;
      result.best.model = model;
      result.best.dev_accuracy = dev_acc;
      result.best.selection_provenance = cfg.selection_split;
      since_best = 0;
    } else {
      ++since_best;
      if (cfg.patience > 0 && since_best >= cfg.patience) break;
    }
  }
  return result;
}

std::pair<std::int32_t, Eigen::VectorXd> predict(const HeadModel& model,
                                                 const Eigen::VectorXd& x) {
  if (x.size() != model.W.cols()) {
    throw ValidationError("predict dimension " + std::to_string(x.size()) +
                          " does not match model d=" + std::to_string(model.W.cols()));
  }
  const Eigen::VectorXd p = softmax(model.W * x + model.b);
  Eigen::Index arg = 0;
  p.maxCoeff(&arg);
  return {static_cast<std::int32_t>(arg), p};
}

void save_model(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out.write(kMagic, 4);
  write_pod(out, kVersion);
  write_pod<std::uint32_t>(out, ckpt.model.d);
  write_pod<std::uint32_t>(out, ckpt.model.C);
  write_pod<std::uint64_t>(out, ckpt.model.init_seed);
  write_pod<std::uint32_t>(out, ckpt.epoch);
  write_pod<double>(out, ckpt.dev_accuracy);
  write_string(out, ckpt.selection_provenance);
  for (std::uint32_t i = 0; i < ckpt.model.C; ++i) {
    for (std::uint32_t j = 0; j < ckpt.model.d; ++j) write_pod<double>(out, ckpt.model.W(i, j));
  }
  for (std::uint32_t i = 0; i < ckpt.model.C; ++i) write_pod<double>(out, ckpt.model.b[i]);
  if (!out) throw ValidationError("write failed for '" + path + "'");
}

Checkpoint load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw ValidationError("'" + path + "': bad magic, not a model file");
  }
  const auto version = read_pod<std::uint16_t>(in, "version");
  if (version != kVersion) {
    throw ValidationError("'" + path + "': unsupported version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.model.d = read_pod<std::uint32_t>(in, "d");
  ckpt.model.C = read_pod<std::uint32_t>(in, "C");
  ckpt.model.init_seed = read_pod<std::uint64_t>(in, "init seed");
  ckpt.epoch = read_pod<std::uint32_t>(in, "epoch");
  ckpt.dev_accuracy = read_pod<double>(in, "dev accuracy");
  ckpt.selection_provenance = read_string(in, "provenance");
  ckpt.model.W.resize(ckpt.model.C, ckpt.model.d);
  for (std::uint32_t i = 0; i < ckpt.model.C; ++i) {
    for (std::uint32_t j = 0; j < ckpt.model.d; ++j) {
      ckpt.model.W(i, j) = read_pod<double>(in, "W entry");
    }
  }
  ckpt.model.b.resize(ckpt.model.C);
  for (std::uint32_t i = 0; i < ckpt.model.C; ++i) {
    ckpt.model.b[i] = read_pod<double>(in, "b entry");
  }
  return ckpt;
}

void save_history_csv(const std::vector<EpochStats>& history, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << "epoch,train_loss,dev_accuracy\n";
  out.precision(17);
  for (const auto& e : history) {
    out << e.epoch << ',' << e.train_loss << ',' << e.dev_accuracy << '\n';
  }
  if (!out) throw ValidationError("write failed for '" + path + "'");
}

}  // namespace xite
