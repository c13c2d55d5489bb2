#include "afe/bundle.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace afe {

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void i32(std::int32_t v) { put(static_cast<std::uint32_t>(v), 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void str(std::string_view s) {
    u64(s.size());
    buf_.append(s);
  }
  void vec(const Vector& v) {
    u64(static_cast<std::uint64_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) f64(v(i));
  }
  void mat(const Matrix& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) f64(m(r, c));
  }
  void hashes(const std::vector<std::uint64_t>& h) {
    u64(h.size());
    for (auto v : h) u64(v);
  }
  void raw(std::string_view s) { buf_.append(s); }
  std::string& bytes() { return buf_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::string buf_;
};

class Reader {
 public:
  Reader(std::string_view bytes, std::string where) : s_(bytes), where_(std::move(where)) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::int32_t i32() { return static_cast<std::int32_t>(static_cast<std::uint32_t>(get(4))); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::string str() {
    const auto n = count(1);
    std::string out(s_.substr(pos_, n));
    pos_ += n;
    return out;
  }
  Vector vec() {
    const auto n = count(8);
    Vector v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = f64();
    return v;
  }
  Matrix mat() {
    const auto r = u64();
    const auto c = u64();
    if (c != 0 && r > (s_.size() - pos_) / 8 / c) fail("matrix larger than the remaining payload");
    Matrix m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = f64();
    return m;
  }
  std::vector<std::uint64_t> hashes() {
    const auto n = count(8);
    std::vector<std::uint64_t> h(n);
    for (auto& v : h) v = u64();
    return h;
  }
  std::string_view take(std::size_t n) {
    need(n);
    auto out = s_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  bool done() const { return pos_ == s_.size(); }
  void expect_done() const {
    if (!done()) fail("trailing bytes");
  }
  [[noreturn]] void fail(const std::string& what) const { throw DataError("bundle " + where_ + ": " + what); }

 private:
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  // element count followed by at least count * width bytes
  std::size_t count(std::size_t width) {
    const auto n = u64();
    if (n > (s_.size() - pos_) / width) fail("length field exceeds the payload");
    return static_cast<std::size_t>(n);
  }
  void need(std::size_t n) const {
    if (s_.size() - pos_ < n) fail("truncated");
  }
  std::string_view s_;
  std::size_t pos_ = 0;
  std::string where_;
};

void section(Writer& out, const char (&tag)[5], const std::string& payload) {
  out.raw({tag, 4});
  out.u64(payload.size());
  out.raw(payload);
}

void write_svm(Writer& w, const SvmModel& m) {
  w.f64(m.hyper.c);
  w.f64(m.hyper.gamma);
  w.u64(static_cast<std::uint64_t>(m.input_dim));
  w.u64(m.data_hash);
  for (const auto& b : m.machines) {
    w.mat(b.support_vectors);
    w.vec(b.dual_coef);
    w.f64(b.bias);
    w.f64(b.gamma);
  }
}

SvmModel read_svm(Reader& r) {
  SvmModel m;
  m.hyper.c = r.f64();
  m.hyper.gamma = r.f64();
  m.input_dim = static_cast<Eigen::Index>(r.u64());
  m.data_hash = r.u64();
  for (auto& b : m.machines) {
    b.support_vectors = r.mat();
    b.dual_coef = r.vec();
    b.bias = r.f64();
    b.gamma = r.f64();
    if (b.support_vectors.rows() != b.dual_coef.size() || b.support_vectors.cols() != m.input_dim)
      r.fail("SVM machine shape mismatch");
  }
  return m;
}

void write_nn(Writer& w, const NnModel& m) {
  w.str(m.arch.name);
  w.i32(m.arch.input_width);
  w.u64(m.arch.layers.size());
  for (const auto& l : m.arch.layers) {
    w.u8(static_cast<std::uint8_t>(l.kind));
    w.i32(l.units);
    w.i32(l.kernel);
    w.f64(l.rate);
    w.i32(l.declared_in);
  }
  for (const auto& p : m.params) {
    w.mat(p.weight);
    w.vec(p.bias);
  }
  w.u64(m.seed);
  w.i32(m.epochs_trained);
}

NnModel read_nn(Reader& r) {
  NnModel m;
  m.arch.name = r.str();
  m.arch.input_width = r.i32();
  const auto layers = r.u64();
  if (layers > 1024) r.fail("implausible layer count");
  for (std::uint64_t i = 0; i < layers; ++i) {
    LayerSpec l;
    const auto kind = r.u8();
    if (kind > static_cast<std::uint8_t>(LayerKind::Relu)) r.fail("unknown layer kind");
    l.kind = static_cast<LayerKind>(kind);
    l.units = r.i32();
    l.kernel = r.i32();
    l.rate = r.f64();
    l.declared_in = r.i32();
    m.arch.layers.push_back(l);
  }
  std::vector<Shape> shapes;
  try {
    shapes = m.arch.shapes();
  } catch (const ConfigError& e) {
    r.fail(std::string("invalid network: ") + e.what());
  }
  m.params.resize(m.arch.layers.size());
  for (auto& p : m.params) {
    p.weight = r.mat();
    p.bias = r.vec();
  }
  const NnModel ref = init_model(m.arch, 0);
  for (std::size_t l = 0; l < m.params.size(); ++l)
    if (m.params[l].weight.rows() != ref.params[l].weight.rows() ||
        m.params[l].weight.cols() != ref.params[l].weight.cols() || m.params[l].bias.size() != ref.params[l].bias.size())
      r.fail("network parameter shape mismatch in layer " + std::to_string(l));
  m.seed = r.u64();
  m.epochs_trained = r.i32();
  return m;
}

std::string prep_payload(const PreprocState& p) {
  Writer w;
  w.i32(p.features.frames.frame_length);
  w.i32(p.features.frames.hop);
  w.i32(static_cast<int>(p.features.frames.window));
  w.i32(p.features.mfcc_filters);
  w.i32(p.features.mfcc_coeffs);
  w.i32(p.features.mel_bands);
  w.f64(p.features.rolloff_fraction);
  w.f64(p.features.log_floor);
  w.f64(p.window_seconds);
  w.i32(p.sample_rate);
  return std::move(w.bytes());
}

}  // namespace

std::string serialize(const EnsembleModel& m) {
  Writer out;
  out.raw("AFE1");
  out.u16(kBundleVersion);

  section(out, "PREP", prep_payload(m.preproc));
  {
    Writer w;
    const auto& o = m.preproc.outliers;
    w.vec(o.q1);
    w.vec(o.q3);
    w.vec(o.median);
    w.vec(o.lower);
    w.vec(o.upper);
    w.f64(o.fence_multiplier);
    section(out, "OUTL", w.bytes());
  }
  {
    Writer w;
    w.vec(m.preproc.scaler.min);
    w.vec(m.preproc.scaler.max);
    section(out, "SCAL", w.bytes());
  }
  {
    Writer w;
    const auto& k = m.preproc.mask;
    w.u64(k.keep.size());
    for (std::size_t j = 0; j < k.keep.size(); ++j) {
      w.u8(k.keep[j] ? 1 : 0);
      w.u8(static_cast<std::uint8_t>(k.dropped_by[j]));
    }
    w.vec(k.variance);
    w.vec(k.chi2);
    w.vec(k.overlap);
    w.vec(k.spearman);
    for (auto s : k.survivors) w.u64(s);
    section(out, "MASK", w.bytes());
  }
  for (const auto& l : m.bank.learners) {
    Writer w;
    w.str(l.tag);
    w.u64(l.preproc_hash);
    w.hashes(l.train_rows);
    if (const auto* svm = std::get_if<SvmModel>(&l.model)) {
      w.u8(0);
      write_svm(w, *svm);
    } else {
      w.u8(1);
      write_nn(w, std::get<NnModel>(l.model));
    }
    section(out, "LRNR", w.bytes());
  }
  {
    Writer w;
    write_svm(w, m.meta);
    section(out, "META", w.bytes());
  }
  {
    Writer w;
    w.u64(m.preproc.hash());
    w.hashes(m.meta_rows);
    section(out, "PROV", w.bytes());
  }
  return std::move(out.bytes());
}

EnsembleModel deserialize(std::string_view bytes) {
  Reader top(bytes, "header");
  if (bytes.size() < 6 || top.take(4) != "AFE1") throw DataError("not a model bundle (bad magic)");
  const auto version = top.u16();
  if (version != kBundleVersion)
    throw DataError("bundle version " + std::to_string(version) + " is not supported (expected " +
                    std::to_string(kBundleVersion) + ")");

  PreprocState prep;
  BaseBank bank;
  SvmModel meta;
  std::vector<std::uint64_t> meta_rows;
  std::uint64_t stored_hash = 0;
  bool seen_prep = false, seen_outl = false, seen_scal = false, seen_mask = false, seen_meta = false, seen_prov = false;

  while (!top.done()) {
    const std::string tag(top.take(4));
    const auto len = top.u64();
    if (len > bytes.size()) top.fail("section '" + tag + "' length exceeds the file");
    Reader r(top.take(static_cast<std::size_t>(len)), "section " + tag);
    if (tag == "PREP") {
      auto& f = prep.features;
      f.frames.frame_length = r.i32();
      f.frames.hop = r.i32();
      const int window = r.i32();
      if (window != static_cast<int>(WindowKind::Hann)) r.fail("unknown window kind");
      f.frames.window = static_cast<WindowKind>(window);
      f.mfcc_filters = r.i32();
      f.mfcc_coeffs = r.i32();
      f.mel_bands = r.i32();
      f.rolloff_fraction = r.f64();
      f.log_floor = r.f64();
      prep.window_seconds = r.f64();
      prep.sample_rate = r.i32();
      seen_prep = true;
    } else if (tag == "OUTL") {
      auto& o = prep.outliers;
      o.q1 = r.vec();
      o.q3 = r.vec();
      o.median = r.vec();
      o.lower = r.vec();
      o.upper = r.vec();
      o.fence_multiplier = r.f64();
      seen_outl = true;
    } else if (tag == "SCAL") {
      prep.scaler.min = r.vec();
      prep.scaler.max = r.vec();
      seen_scal = true;
    } else if (tag == "MASK") {
      auto& k = prep.mask;
      const auto n = r.u64();
      if (n > len) r.fail("mask length exceeds the section");
      for (std::uint64_t j = 0; j < n; ++j) {
        k.keep.push_back(r.u8() != 0);
        const auto stage = r.u8();
        if (stage > static_cast<std::uint8_t>(FilterStage::Spearman)) r.fail("unknown filter stage");
        k.dropped_by.push_back(static_cast<FilterStage>(stage));
      }
      k.variance = r.vec();
      k.chi2 = r.vec();
      k.overlap = r.vec();
      k.spearman = r.vec();
      for (auto& s : k.survivors) s = r.u64();
      seen_mask = true;
    } else if (tag == "LRNR") {
      BaseLearner l;
      l.tag = r.str();
      l.preproc_hash = r.u64();
      l.train_rows = r.hashes();
      const auto kind = r.u8();
      if (kind == 0) l.model = read_svm(r);
      else if (kind == 1) l.model = read_nn(r);
      else r.fail("unknown learner kind");
      bank.learners.push_back(std::move(l));
    } else if (tag == "META") {
      meta = read_svm(r);
      seen_meta = true;
    } else if (tag == "PROV") {
      stored_hash = r.u64();
      meta_rows = r.hashes();
      seen_prov = true;
    } else {
      top.fail("unknown section '" + tag + "'");
    }
    r.expect_done();
  }
  if (!(seen_prep && seen_outl && seen_scal && seen_mask && seen_meta && seen_prov))
    throw DataError("bundle is missing a required section");
  const auto d = prep.outliers.dimension();
  if (prep.outliers.q1.size() != d || prep.outliers.lower.size() != d || prep.outliers.upper.size() != d ||
      prep.scaler.dimension() != d || prep.mask.dimension() != d)
    throw DataError("bundle preprocessing sections disagree on the feature count");
  if (prep.hash() != stored_hash) throw DataError("bundle preprocessing hash mismatch");
  try {
    return assemble(std::move(bank), std::move(meta), std::move(prep), std::move(meta_rows));
  } catch (const ConfigError& e) {
    throw DataError(std::string("bundle content is inconsistent: ") + e.what());
  }
}

void save_bundle(const EnsembleModel& m, const std::filesystem::path& path) {
  const std::string bytes = serialize(m);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write bundle " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing bundle " + path.string());
}

EnsembleModel load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open bundle " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

}  // namespace afe
