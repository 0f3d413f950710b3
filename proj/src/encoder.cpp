#include "qemine/encoder.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "qemine/error.hpp"
#include "qemine/rng.hpp"

namespace qemine {
namespace {

constexpr std::array<std::uint8_t, 4> kMagic{'Q', 'E', 'M', '1'};
constexpr std::uint16_t kVersion = 1;

class ByteWriter {
 public:
  template <typename T>
  void put(T value) {
    static_assert(std::is_integral_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bytes_.push_back(static_cast<std::uint8_t>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF));
    }
  }
  void put_floats(const std::vector<float>& values) {
    for (float f : values) put(std::bit_cast<std::uint32_t>(f));
  }
  void put_raw(std::span<const std::uint8_t> raw) { bytes_.insert(bytes_.end(), raw.begin(), raw.end()); }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }
  std::vector<float> get_floats(std::size_t count, const char* what) {
    need(count * 4, what);
    std::vector<float> out(count);
    for (auto& f : out) f = std::bit_cast<float>(get<std::uint32_t>(what));
    return out;
  }
  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      throw CorruptionError(std::string("model file truncated while reading ") + what);
    }
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::uint64_t checksum(std::span<const std::uint8_t> bytes) {
  return fnv1a64(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

bool all_finite(const std::vector<float>& v) {
  for (float f : v) {
    if (!std::isfinite(f)) return false;
  }
  return true;
}

void fill_normal(std::vector<float>& v, Rng& rng, double stddev) {
  for (auto& x : v) x = static_cast<float>(rng.normal() * stddev);
}

}  // namespace

std::string_view task_name(Task task) {
  switch (task) {
    case Task::kQE:
      return "qe";
    case Task::kSTS:
      return "sts";
    case Task::kNLI:
      return "nli";
  }
  return "unknown";
}

EncoderModel EncoderModel::random(const FeaturizerConfig& config, std::uint32_t hidden,
                                  std::uint32_t dim, std::uint64_t seed, double inputScale) {
  config.validate();
  if (hidden == 0 || dim == 0) throw ContractViolation("encoder sizes must be positive");
  EncoderModel m;
  m.config = config;
  m.hidden = hidden;
  m.dim = dim;
  m.W1.resize(static_cast<std::size_t>(hidden) * config.hashDim);
  m.b1.assign(hidden, 0.0f);
  m.W2.resize(static_cast<std::size_t>(dim) * hidden);
  m.b2.assign(dim, 0.0f);
  Rng rng = Rng::derive(seed, 0x656e636f646572ULL);
  fill_normal(m.W1, rng, inputScale);
  fill_normal(m.W2, rng, 1.0 / std::sqrt(static_cast<double>(hidden)));
  return m;
}

void EncoderModel::validate() const {
  config.validate();
  const std::size_t F = config.hashDim;
  if (W1.size() != static_cast<std::size_t>(hidden) * F || b1.size() != hidden ||
      W2.size() != static_cast<std::size_t>(dim) * hidden || b2.size() != dim) {
    throw ContractViolation("encoder weight shapes are inconsistent with (F, H, d)");
  }
  if (!all_finite(W1) || !all_finite(b1) || !all_finite(W2) || !all_finite(b2)) {
    throw ContractViolation("encoder holds non-finite weights");
  }
}

HeadSet HeadSet::zeros(std::uint32_t dim) {
  HeadSet h;
  h.qe.weights.assign(regression_feature_size(dim), 0.0f);
  h.sts.weights.assign(regression_feature_size(dim), 0.0f);
  h.nli.weights.assign(3 * (nli_feature_size(dim) + 1), 0.0f);
  return h;
}

HeadSet HeadSet::random(std::uint32_t dim, Rng& rng, double scale) {
  HeadSet h = zeros(dim);
  fill_normal(h.qe.weights, rng, scale);
  fill_normal(h.sts.weights, rng, scale);
  fill_normal(h.nli.weights, rng, scale);
  return h;
}

void HeadSet::validate(std::uint32_t dim) const {
  if (qe.weights.size() != regression_feature_size(dim) ||
      sts.weights.size() != regression_feature_size(dim) ||
      nli.weights.size() != 3 * (nli_feature_size(dim) + 1)) {
    throw ContractViolation("head shapes are inconsistent with embedding dimension " +
                            std::to_string(dim));
  }
  if (!all_finite(qe.weights) || !all_finite(sts.weights) || !all_finite(nli.weights) ||
      !std::isfinite(qe.bias) || !std::isfinite(sts.bias)) {
    throw ContractViolation("head holds non-finite weights");
  }
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw ContractViolation("cosine_similarity: dimension mismatch " + std::to_string(u.size()) +
                            " vs " + std::to_string(v.size()));
  }
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) return 0.0;
  const double c = dot / (std::sqrt(nu) * std::sqrt(nv));
  return std::clamp(c, -1.0, 1.0);
}

std::vector<double> regression_features(std::span<const double> u, std::span<const double> v) {
  const double cos = cosine_similarity(u, v);
  const std::size_t d = u.size();
  std::vector<double> f(regression_feature_size(d));
  for (std::size_t i = 0; i < d; ++i) {
    f[i] = std::abs(u[i] - v[i]);
    f[d + i] = u[i] * v[i];
  }
  f[2 * d] = cos;
  return f;
}

std::vector<double> nli_features(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw ContractViolation("nli_features: dimension mismatch");
  const std::size_t d = u.size();
  std::vector<double> f(nli_feature_size(d));
  for (std::size_t i = 0; i < d; ++i) {
    f[i] = u[i];
    f[d + i] = v[i];
    f[2 * d + i] = std::abs(u[i] - v[i]);
    f[3 * d + i] = u[i] * v[i];
  }
  return f;
}

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

EncoderActivations encode_with_activations(const EncoderModel& model, const FeatureVector& fv) {
  const std::size_t F = model.features();
  const std::size_t H = model.hidden;
  const std::size_t d = model.dim;
  for (auto idx : fv.indices) {
    if (idx >= F) {
      throw ContractViolation("feature index " + std::to_string(idx) + " outside model dimension " +
                              std::to_string(F));
    }
  }
  EncoderActivations act;
  act.hidden.resize(H);
  for (std::size_t h = 0; h < H; ++h) {
    const float* row = model.W1.data() + h * F;
    double a = model.b1[h];
    for (std::size_t k = 0; k < fv.indices.size(); ++k) a += row[fv.indices[k]] * fv.values[k];
    act.hidden[h] = std::tanh(a);
  }
  act.embedding.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    const float* row = model.W2.data() + j * H;
    double e = model.b2[j];
    for (std::size_t h = 0; h < H; ++h) e += row[h] * act.hidden[h];
    act.embedding[j] = e;
  }
  return act;
}

std::vector<double> encode(const EncoderModel& model, const FeatureVector& fv) {
  return encode_with_activations(model, fv).embedding;
}

std::vector<double> encode_text(const EncoderModel& model, std::string_view text) {
  return encode(model, featurize(text, model.config));
}

double regression_head_score(const RegressionHead& head, std::span<const double> u,
                             std::span<const double> v) {
  const std::size_t d = u.size();
  if (v.size() != d || head.weights.size() != regression_feature_size(d)) {
    throw ContractViolation("regression head size mismatch");
  }
  const float* w = head.weights.data();
  double z = head.bias;
  for (std::size_t i = 0; i < d; ++i) z += w[i] * std::abs(u[i] - v[i]);
  for (std::size_t i = 0; i < d; ++i) z += w[d + i] * (u[i] * v[i]);
  z += w[2 * d] * cosine_similarity(u, v);
  return logistic(z);
}

std::array<double, 3> nli_head_probs(const NliHead& head, std::span<const double> u,
                                     std::span<const double> v) {
  const auto f = nli_features(u, v);
  const std::size_t stride = f.size() + 1;
  if (head.weights.size() != 3 * stride) throw ContractViolation("NLI head size mismatch");
  std::array<double, 3> logits{};
  for (std::size_t c = 0; c < 3; ++c) {
    const float* row = head.weights.data() + c * stride;
    double z = row[f.size()];
    for (std::size_t i = 0; i < f.size(); ++i) z += row[i] * f[i];
    logits[c] = z;
  }
  const double mx = std::max({logits[0], logits[1], logits[2]});
  std::array<double, 3> p{};
  double sum = 0.0;
  for (std::size_t c = 0; c < 3; ++c) {
    p[c] = std::exp(logits[c] - mx);
    sum += p[c];
  }
  for (auto& x : p) x /= sum;
  return p;
}

Prediction forward_heads(const EncoderModel& model, const HeadSet& heads, std::string_view textA,
                         std::string_view textB, Task task) {
  const auto u = encode_text(model, textA);
  const auto v = encode_text(model, textB);
  Prediction p;
  p.task = task;
  switch (task) {
    case Task::kQE:
      p.score = regression_head_score(heads.qe, u, v);
      break;
    case Task::kSTS:
      p.score = regression_head_score(heads.sts, u, v);
      break;
    case Task::kNLI:
      p.probs = nli_head_probs(heads.nli, u, v);
      break;
  }
  return p;
}

std::vector<std::uint8_t> serialize_model(const EncoderModel& model, const HeadSet& heads) {
  model.validate();
  heads.validate(model.dim);
  ByteWriter w;
  w.put_raw(kMagic);
  w.put<std::uint16_t>(kVersion);
  w.put<std::uint32_t>(model.config.hashDim);
  w.put<std::uint32_t>(model.hidden);
  w.put<std::uint32_t>(model.dim);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.config.ngramOrders.size()));
  for (auto n : model.config.ngramOrders) w.put<std::uint32_t>(n);
  w.put<std::uint64_t>(model.config.hashSeed);
  w.put_floats(model.W1);
  w.put_floats(model.b1);
  w.put_floats(model.W2);
  w.put_floats(model.b2);
  w.put_floats(heads.qe.weights);
  w.put(std::bit_cast<std::uint32_t>(heads.qe.bias));
  w.put_floats(heads.sts.weights);
  w.put(std::bit_cast<std::uint32_t>(heads.sts.bias));
  w.put_floats(heads.nli.weights);
  const auto sum = checksum(w.bytes());
  w.put<std::uint64_t>(sum);
  return std::move(w.bytes());
}

LoadedModel deserialize_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMagic.size() || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw FormatError("not a model file (bad magic)");
  }
  ByteReader r(bytes.subspan(kMagic.size()));
  const auto version = r.get<std::uint16_t>("version");
  if (version != kVersion) throw FormatError("unsupported model version " + std::to_string(version));

  LoadedModel out;
  auto& m = out.model;
  m.config.hashDim = r.get<std::uint32_t>("dimensions");
  m.hidden = r.get<std::uint32_t>("dimensions");
  m.dim = r.get<std::uint32_t>("dimensions");
  const auto orders = r.get<std::uint32_t>("featurizer config");
  if (orders > 64) throw CorruptionError("implausible n-gram order count " + std::to_string(orders));
  m.config.ngramOrders.resize(orders);
  for (auto& n : m.config.ngramOrders) n = r.get<std::uint32_t>("featurizer config");
  m.config.hashSeed = r.get<std::uint64_t>("featurizer config");
  try {
    m.config.validate();
  } catch (const ContractViolation& e) {
    throw FormatError(std::string("invalid featurizer config: ") + e.what());
  }

  const std::size_t F = m.config.hashDim, H = m.hidden, d = m.dim;
  const std::size_t payload = 4 * (H * F + H + d * H + d + 2 * (regression_feature_size(d) + 1) +
                                   3 * (nli_feature_size(d) + 1)) + 8;
  if (r.remaining() < payload) throw CorruptionError("model file truncated: payload shorter than header declares");
  if (r.remaining() > payload) throw CorruptionError("model file has trailing bytes");

  m.W1 = r.get_floats(H * F, "W1");
  m.b1 = r.get_floats(H, "b1");
  m.W2 = r.get_floats(d * H, "W2");
  m.b2 = r.get_floats(d, "b2");
  auto& h = out.heads;
  h.qe.weights = r.get_floats(regression_feature_size(d), "QE head");
  h.qe.bias = std::bit_cast<float>(r.get<std::uint32_t>("QE head"));
  h.sts.weights = r.get_floats(regression_feature_size(d), "STS head");
  h.sts.bias = std::bit_cast<float>(r.get<std::uint32_t>("STS head"));
  h.nli.weights = r.get_floats(3 * (nli_feature_size(d) + 1), "NLI head");
  const std::size_t covered = kMagic.size() + r.position();
  const auto stored = r.get<std::uint64_t>("checksum");
  if (stored != checksum(bytes.first(covered))) throw CorruptionError("model checksum mismatch");
  return out;
}

void save_model(const std::filesystem::path& path, const EncoderModel& model, const HeadSet& heads) {
  const auto bytes = serialize_model(model, heads);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

LoadedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace qemine
