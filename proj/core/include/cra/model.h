// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef CRA_MODEL_H_
#define CRA_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cra/episodes.h"
#include "cra/matrix.h"
#include "cra/records.h"
#include "cra/tape.h"

namespace cra::model {

using ad::Matrix;
using ad::Tape;
using ad::Var;

// Ablation paths. kAttention is "+AM" (self-attention over support and
// query without anchors), kAnchor is "+AAM" (anchors from the support set
// only), kFull adds context augmentation of the anchors.
enum class Variant { kEncoderOnly, kAttention, kAnchor, kFull };

const char* to_string(Variant v);
Variant variant_from_string(std::string_view s);
bool uses_reference(Variant v);

enum class MatchingScale { kPaper, kNone };
enum class Activation { kRelu, kTanh };
enum class EncoderKind { kMlp, kGin };

struct EncoderConfig {
  EncoderKind kind = EncoderKind::kMlp;
  // MLP: hidden widths, each followed by the activation; the final affine
  // map to the embedding width is linear.
  std::vector<std::size_t> hidden = {128};
  Activation activation = Activation::kRelu;
  std::size_t gin_layers = 3;
  double gin_epsilon = 0.0;
};

struct ModelConfig {
  std::size_t input_dim = 0;   // d
  std::size_t embed_dim = 64;  // h
  std::size_t heads = 4;       // H
  std::size_t key_dim = 0;     // d_k; 0 means h
  EncoderConfig encoder;
  std::size_t reference_size = 512;  // M
  MatchingScale matching_scale = MatchingScale::kPaper;
  Variant variant = Variant::kFull;
  // Blocks query-to-other-query attention inside the anchor block.
  bool mask_query_attention = false;
  std::uint64_t seed = 0;
  data::FeatureSpec features;

  void validate() const;
  std::size_t resolved_key_dim() const { return key_dim == 0 ? embed_dim : key_dim; }
};

// Ordered named parameter tensors.
class Params {
 public:
  void add(std::string name, Matrix value);
  std::size_t size() const { return names_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  Matrix& value(std::size_t i) { return values_[i]; }
  const Matrix& value(std::size_t i) const { return values_[i]; }
  std::vector<Matrix>& values() { return values_; }
  const std::vector<Matrix>& values() const { return values_; }
  const std::vector<std::string>& names() const { return names_; }
  bool contains(std::string_view name) const;
  Matrix& at(std::string_view name);
  const Matrix& at(std::string_view name) const;
  bool all_finite() const;
  std::size_t scalar_count() const;

  friend bool operator==(const Params&, const Params&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<Matrix> values_;
};

struct ParamShape {
  std::string name;
  std::size_t rows;
  std::size_t cols;
  bool is_bias;
};

// Parameter names and shapes implied by the config, in checkpoint order.
std::vector<ParamShape> param_layout(const ModelConfig& config);

// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and zero biases. Each
// tensor draws from its own stream seeded by (seed, name), so tensors
// shared between variants start identical.
Params init_params(const ModelConfig& config);

struct Model {
  ModelConfig config;
  Params params;
};

class ModelError : public std::runtime_error {
 public:
  enum class Kind { kMissingClass, kNonFiniteLoss, kEmptyReferencePool };
  ModelError(Kind kind, const std::string& detail);
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// ---------------------------------------------------------------------------
// Parameters bound onto a tape.

struct AttentionHead {
  Var query, key, value, output;  // W^Q, W^K, W^V (width x d_k), W^O (d_k x width)
};

struct AttentionParams {
  std::vector<AttentionHead> heads;
  std::size_t key_dim = 0;
};

struct EncoderParams {
  std::vector<Var> weights;
  std::vector<Var> biases;
  Activation activation = Activation::kRelu;
  EncoderKind kind = EncoderKind::kMlp;
  std::size_t gin_layers = 0;
};

struct BoundParams {
  EncoderParams encoder;
  AttentionParams cam;  // width h
  AttentionParams aam;  // width 3h
  AttentionParams am;   // width h, "+AM" only
  std::vector<Var> all; // aligned with Params order
};

BoundParams bind_params(Tape& tape, const ModelConfig& config, const Params& params,
                        bool requires_grad);

// ---------------------------------------------------------------------------
// Operations.

struct MhaOutput {
  Var out;
  std::vector<Var> weights;  // per-head post-softmax attention, n1 x n2
};

// sum_i softmax(Q W_i^Q (K W_i^K)^T / sqrt(d_k)) V W_i^V W_i^O. `mask`, if
// given, is added to every head's logits (0 or -inf entries). When Q has
// far fewer rows than K the products are reassociated so that K and V are
// never projected.
MhaOutput mha(const Var& q, const Var& k, const Var& v, const AttentionParams& params,
              const Matrix* mask = nullptr);

// x + mha(x, x, x)
Var r_mha(const Var& x, const AttentionParams& params, const Matrix* mask = nullptr);

struct EncoderInput {
  std::size_t molecules = 0;
  Matrix features;           // MLP: molecules x d; GIN: atoms x atom features
  ad::CsrMatrix aggregate;   // GIN: (1 + eps) I + adjacency
  ad::CsrMatrix pooling;     // GIN: molecules x atoms
  bool graph = false;
};

EncoderInput make_encoder_input(std::span<const data::MoleculeRecord* const> records,
                                const ModelConfig& config);

Var encode(const EncoderParams& encoder, const EncoderInput& input);

// Row 0 is class -1, row 1 is class +1.
Var initial_anchors(const Var& support, std::span<const int> labels);

// First two rows of r_mha([anchors : reference]); the reference rows of the
// output are never formed.
Var context_augment(const Var& anchors, const Var& reference, const AttentionParams& cam);

struct AnchorAugmentOutput {
  Var support;
  Var query;
  std::vector<Var> weights;
};

// r_mha over [S' || P'_-1 || P'_+1 : Q' || P'_-1 || P'_+1]; keeps the
// first h columns.
AnchorAugmentOutput anchor_augment(const Var& support, const Var& query, const Var& anchors,
                                   const AttentionParams& aam, bool mask_query_attention = false);

// L2-normalised rows whose norm fell below the floor.
struct MatchDiagnostics {
  std::size_t zero_vectors = 0;
};

// p_j = sigma(scale * sum_i y_i / N^s(y_i) * cos(q_j, s_i)), n_q x 1.
Var match_predict(const Var& query, const Var& support, std::span<const int> labels,
                  MatchingScale scale, MatchDiagnostics* diagnostics = nullptr);

Var bce_loss(const Var& probs, std::span<const int> labels);

// Support and query rows are encoded together and the reference rows on
// their own, so S' and Q' do not depend on whether a reference is used.
struct EpisodeInput {
  EncoderInput labeled;    // support rows, then query rows
  EncoderInput reference;  // empty when the variant does not use it
  std::size_t n_support = 0;
  std::size_t n_query = 0;
  std::size_t n_reference = 0;
  std::vector<int> support_labels;
  std::vector<int> query_labels;
};

EpisodeInput make_episode_input(const data::Episode& episode, const ModelConfig& config,
                                bool with_reference);
inline EpisodeInput make_episode_input(const data::Episode& episode,
                                       const ModelConfig& config) {
  return make_episode_input(episode, config, uses_reference(config.variant));
}

struct ForwardResult {
  Var probs;
  Var support_embedding;    // S'
  Var query_embedding;      // Q'
  Var reference_embedding;  // B' (invalid when unused)
  Var anchors;              // P
  Var augmented_anchors;    // P' (invalid without context augmentation)
  Var support_star;         // S*
  Var query_star;           // Q*
  std::vector<Var> attention;  // anchor / +AM block weights per head
  MatchDiagnostics diagnostics;
};

ForwardResult forward_episode(const EpisodeInput& input, const BoundParams& params,
                              const ModelConfig& config, Variant variant);
inline ForwardResult forward_episode(const EpisodeInput& input, const BoundParams& params,
                                     const ModelConfig& config) {
  return forward_episode(input, params, config, config.variant);
}

// Probabilities p(y = +1) for the episode's queries.
std::vector<double> predict(const Model& model, const data::Episode& episode);

}  // namespace cra::model

#endif  // CRA_MODEL_H_
