#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cdimc/autodiff.hpp"

namespace cdimc {

struct DenseLayer {
  Parameter weight;  // out x in
  Parameter bias;    // out x 1
  bool relu = true;

  Index inputs() const { return weight.value.cols(); }
  Index outputs() const { return weight.value.rows(); }
};

// Fully-connected stack with ReLU after every layer except the last.
class Mlp {
 public:
  Mlp() = default;
  // widths = {in, h1, ..., out}. Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)),
  // biases 0.
  Mlp(std::span<const Index> widths, Rng& rng);

  Var forward(Tape& tape, Var x);
  Matrix forward(const Matrix& x) const;

  std::vector<Parameter*> parameters();
  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  Index input_dim() const { return layers_.front().inputs(); }
  Index output_dim() const { return layers_.back().outputs(); }

 private:
  std::vector<DenseLayer> layers_;
};

// What the view-v decoder reconstructs from during pre-training: the view's
// own code h^(v), or the fused code h* shared by all available views.
enum class DecoderInput { View, Fused };

std::string to_string(DecoderInput input);
DecoderInput parse_decoder_input(const std::string& text);

struct NetworkShape {
  std::vector<Index> view_dims;  // m_v per view
  int code_dim = 2;              // k
  Index wide_width = 1500;
  double hidden_ratio = 0.8;
  DecoderInput decoder_input = DecoderInput::Fused;
};

// Encoder widths m -> floor(r*m) -> floor(r*m) -> wide -> k, hidden widths
// floored to at least 1. The decoder mirrors them.
std::vector<Index> encoder_widths(Index input_dim, int code_dim, Index wide_width, double hidden_ratio);

// View-specific encoders f_EC^(v) and decoders f_DC^(v).
class MultiViewAutoencoder {
 public:
  MultiViewAutoencoder() = default;
  MultiViewAutoencoder(const NetworkShape& shape, std::uint64_t seed);

  std::size_t views() const { return encoders_.size(); }
  int code_dim() const { return code_dim_; }
  DecoderInput decoder_input() const { return decoder_input_; }

  Mlp& encoder(std::size_t v) { return encoders_.at(v); }
  Mlp& decoder(std::size_t v) { return decoders_.at(v); }
  const Mlp& encoder(std::size_t v) const { return encoders_.at(v); }
  const Mlp& decoder(std::size_t v) const { return decoders_.at(v); }

  std::vector<Parameter*> encoder_parameters();
  std::vector<Parameter*> parameters();

  // H^(v) for a zero-filled m_v x b input.
  Matrix encode(std::size_t v, const Matrix& x) const;
  // Fused code h* for every column, from zero-filled inputs and 0/1 masks.
  Matrix fused_codes(std::span<const Matrix> inputs, std::span<const Vector> masks) const;

  // Exact textual checkpoint (see docs in the README).
  void save(const std::filesystem::path& file) const;
  static MultiViewAutoencoder load(const std::filesystem::path& file);

  friend bool operator==(const MultiViewAutoencoder& a, const MultiViewAutoencoder& b);

 private:
  std::vector<Mlp> encoders_;
  std::vector<Mlp> decoders_;
  int code_dim_ = 0;
  DecoderInput decoder_input_ = DecoderInput::Fused;
};

}  // namespace cdimc
