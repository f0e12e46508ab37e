#include "cdimc/network.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cdimc/dataset_io.hpp"

namespace cdimc {

namespace {

constexpr const char* kCheckpointMagic = "cdimc-checkpoint";
constexpr int kCheckpointVersion = 1;

}  // namespace

Mlp::Mlp(std::span<const Index> widths, Rng& rng) {
  if (widths.size() < 2) throw ConfigError("Mlp: need at least an input and an output width");
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const Index in = widths[i], out = widths[i + 1];
    if (in < 1 || out < 1) throw ConfigError("Mlp: layer widths must be positive");
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    DenseLayer layer;
    layer.weight = Parameter(random_uniform(out, in, -bound, bound, rng));
    layer.bias = Parameter(Matrix::Zero(out, 1));
    layer.relu = i + 2 < widths.size();
    layers_.push_back(std::move(layer));
  }
}

Var Mlp::forward(Tape& tape, Var x) {
  for (DenseLayer& layer : layers_) {
    x = affine(x, tape.parameter(layer.weight), tape.parameter(layer.bias));
    if (layer.relu) x = relu(x);
  }
  return x;
}

Matrix Mlp::forward(const Matrix& x) const {
  Matrix h = x;
  for (const DenseLayer& layer : layers_) {
    if (h.rows() != layer.inputs())
      throw DimensionError("Mlp: input has " + std::to_string(h.rows()) + " rows, layer expects " +
                           std::to_string(layer.inputs()));
    Matrix next = layer.weight.value * h;
    next.colwise() += layer.bias.value.col(0);
    if (layer.relu) next = next.cwiseMax(0.0);
    h = std::move(next);
  }
  return h;
}

std::vector<Parameter*> Mlp::parameters() {
  std::vector<Parameter*> out;
  for (DenseLayer& layer : layers_) {
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
  }
  return out;
}

std::string to_string(DecoderInput input) { return input == DecoderInput::View ? "view" : "fused"; }

DecoderInput parse_decoder_input(const std::string& text) {
  if (text == "view") return DecoderInput::View;
  if (text == "fused") return DecoderInput::Fused;
  throw ConfigError("unknown decoder input '" + text + "' (expected view or fused)");
}

std::vector<Index> encoder_widths(Index input_dim, int code_dim, Index wide_width, double hidden_ratio) {
  if (input_dim < 1 || code_dim < 1 || wide_width < 1 || !(hidden_ratio > 0.0))
    throw ConfigError("encoder_widths: dimensions and ratio must be positive");
  const Index hidden = std::max<Index>(1, static_cast<Index>(std::floor(hidden_ratio * static_cast<double>(input_dim))));
  return {input_dim, hidden, hidden, wide_width, code_dim};
}

MultiViewAutoencoder::MultiViewAutoencoder(const NetworkShape& shape, std::uint64_t seed)
    : code_dim_(shape.code_dim), decoder_input_(shape.decoder_input) {
  if (shape.view_dims.empty()) throw ConfigError("network: no views");
  Rng rng(seed);
  for (Index dim : shape.view_dims) {
    std::vector<Index> widths = encoder_widths(dim, shape.code_dim, shape.wide_width, shape.hidden_ratio);
    encoders_.emplace_back(widths, rng);
    std::vector<Index> mirrored(widths.rbegin(), widths.rend());
    decoders_.emplace_back(mirrored, rng);
  }
}

std::vector<Parameter*> MultiViewAutoencoder::encoder_parameters() {
  std::vector<Parameter*> out;
  for (Mlp& e : encoders_)
    for (Parameter* p : e.parameters()) out.push_back(p);
  return out;
}

std::vector<Parameter*> MultiViewAutoencoder::parameters() {
  std::vector<Parameter*> out = encoder_parameters();
  for (Mlp& d : decoders_)
    for (Parameter* p : d.parameters()) out.push_back(p);
  return out;
}

Matrix MultiViewAutoencoder::encode(std::size_t v, const Matrix& x) const { return encoders_.at(v).forward(x); }

Matrix MultiViewAutoencoder::fused_codes(std::span<const Matrix> inputs, std::span<const Vector> masks) const {
  if (inputs.size() != views()) throw DimensionError("fused_codes: one input per view required");
  std::vector<Matrix> codes;
  codes.reserve(views());
  for (std::size_t v = 0; v < views(); ++v) codes.push_back(encode(v, inputs[v]));
  return fuse_codes(codes, masks);
}

namespace {

void write_mlp(std::ostream& out, const Mlp& mlp) {
  for (const DenseLayer& layer : mlp.layers()) {
    out << "dense " << layer.outputs() << ' ' << layer.inputs() << ' ' << (layer.relu ? "relu" : "linear") << '\n';
    for (Index r = 0; r < layer.outputs(); ++r) {
      for (Index c = 0; c < layer.inputs(); ++c) out << (c ? " " : "") << format_double(layer.weight.value(r, c));
      out << '\n';
    }
    for (Index r = 0; r < layer.outputs(); ++r) out << (r ? " " : "") << format_double(layer.bias.value(r, 0));
    out << '\n';
  }
}

class TokenReader {
 public:
  TokenReader(std::istream& in, std::string file) : in_(in), file_(std::move(file)) {}

  std::string word() {
    std::string token;
    if (!(in_ >> token)) fail("unexpected end of file");
    return token;
  }
  void expect(const std::string& literal) {
    const std::string token = word();
    if (token != literal) fail("expected '" + literal + "', found '" + token + "'");
  }
  long long integer() {
    const std::string token = word();
    long long value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size()) fail("invalid integer '" + token + "'");
    return value;
  }
  double real() {
    const std::string token = word();
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(value))
      fail("invalid value '" + token + "'");
    return value;
  }
  [[noreturn]] void fail(const std::string& what) const { throw DataError(file_ + ": " + what); }

 private:
  std::istream& in_;
  std::string file_;
};

Mlp read_mlp(TokenReader& reader, long long layers) {
  Mlp mlp;
  for (long long i = 0; i < layers; ++i) {
    reader.expect("dense");
    const long long out = reader.integer(), in = reader.integer();
    if (out < 1 || in < 1) reader.fail("layer widths must be positive");
    const std::string act = reader.word();
    if (act != "relu" && act != "linear") reader.fail("unknown activation '" + act + "'");
    DenseLayer layer;
    Matrix w(out, in), b(out, 1);
    for (Index r = 0; r < out; ++r)
      for (Index c = 0; c < in; ++c) w(r, c) = reader.real();
    for (Index r = 0; r < out; ++r) b(r, 0) = reader.real();
    layer.weight = Parameter(std::move(w));
    layer.bias = Parameter(std::move(b));
    layer.relu = act == "relu";
    if (!mlp.layers().empty() && mlp.layers().back().outputs() != layer.inputs())
      reader.fail("layer shapes do not chain");
    mlp.layers().push_back(std::move(layer));
  }
  return mlp;
}

bool same_mlp(const Mlp& a, const Mlp& b) {
  if (a.layers().size() != b.layers().size()) return false;
  for (std::size_t i = 0; i < a.layers().size(); ++i) {
    const DenseLayer& x = a.layers()[i];
    const DenseLayer& y = b.layers()[i];
    if (x.relu != y.relu || x.weight.value.rows() != y.weight.value.rows() ||
        x.weight.value.cols() != y.weight.value.cols() || x.weight.value != y.weight.value ||
        x.bias.value != y.bias.value)
      return false;
  }
  return true;
}

}  // namespace

void MultiViewAutoencoder::save(const std::filesystem::path& file) const {
  std::ostringstream out;
  out << kCheckpointMagic << " v" << kCheckpointVersion << '\n';
  out << "code_dim " << code_dim_ << '\n';
  out << "decoder_input " << to_string(decoder_input_) << '\n';
  out << "views " << views() << '\n';
  for (std::size_t v = 0; v < views(); ++v) {
    out << "view " << v + 1 << " encoder " << encoders_[v].layers().size() << '\n';
    write_mlp(out, encoders_[v]);
    out << "view " << v + 1 << " decoder " << decoders_[v].layers().size() << '\n';
    write_mlp(out, decoders_[v]);
  }
  std::ofstream f(file, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write checkpoint " + file.string());
  f << out.str();
  if (!f) throw DataError("write failed for checkpoint " + file.string());
}

MultiViewAutoencoder MultiViewAutoencoder::load(const std::filesystem::path& file) {
  std::ifstream f(file, std::ios::binary);
  if (!f) throw DataError("cannot open checkpoint " + file.string());
  TokenReader reader(f, file.filename().string());
  reader.expect(kCheckpointMagic);
  reader.expect("v" + std::to_string(kCheckpointVersion));
  MultiViewAutoencoder model;
  reader.expect("code_dim");
  model.code_dim_ = static_cast<int>(reader.integer());
  reader.expect("decoder_input");
  model.decoder_input_ = parse_decoder_input(reader.word());
  reader.expect("views");
  const long long views = reader.integer();
  if (views < 1) reader.fail("views must be positive");
  for (long long v = 1; v <= views; ++v) {
    for (const char* part : {"encoder", "decoder"}) {
      reader.expect("view");
      if (reader.integer() != v) reader.fail("views out of order");
      reader.expect(part);
      Mlp mlp = read_mlp(reader, reader.integer());
      if (mlp.layers().empty()) reader.fail("empty network");
      (std::string(part) == "encoder" ? model.encoders_ : model.decoders_).push_back(std::move(mlp));
    }
    if (model.encoders_.back().output_dim() != model.code_dim_ ||
        model.decoders_.back().input_dim() != model.code_dim_ ||
        model.decoders_.back().output_dim() != model.encoders_.back().input_dim())
      reader.fail("view " + std::to_string(v) + " encoder/decoder shapes are inconsistent");
  }
  return model;
}

bool operator==(const MultiViewAutoencoder& a, const MultiViewAutoencoder& b) {
  if (a.code_dim_ != b.code_dim_ || a.decoder_input_ != b.decoder_input_ || a.views() != b.views()) return false;
  for (std::size_t v = 0; v < a.views(); ++v)
    if (!same_mlp(a.encoders_[v], b.encoders_[v]) || !same_mlp(a.decoders_[v], b.decoders_[v])) return false;
  return true;
}

}  // namespace cdimc
