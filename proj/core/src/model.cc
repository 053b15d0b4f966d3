// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#include "cra/model.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cra/ops.h"
#include "cra/rng.h"

namespace cra::model {
namespace {

constexpr double kNormFloor = 1e-12;

std::string head_name(const char* block, std::size_t head, const char* which) {
  return std::string(block) + ".head" + std::to_string(head) + "." + which;
}

void add_attention_layout(std::vector<ParamShape>& out, const char* block, std::size_t width,
                          std::size_t dk, std::size_t heads) {
  for (std::size_t i = 0; i < heads; ++i) {
    out.push_back({head_name(block, i, "wq"), width, dk, false});
    out.push_back({head_name(block, i, "wk"), width, dk, false});
    out.push_back({head_name(block, i, "wv"), width, dk, false});
    out.push_back({head_name(block, i, "wo"), dk, width, false});
  }
}

AttentionParams bind_attention(const Params& params, const std::vector<Var>& vars,
                               const char* block, std::size_t heads, std::size_t dk) {
  AttentionParams out;
  out.key_dim = dk;
  auto find = [&](const std::string& name) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (params.name(i) == name) return vars[i];
    }
    throw std::invalid_argument("missing parameter '" + name + "'");
  };
  for (std::size_t i = 0; i < heads; ++i) {
    out.heads.push_back({find(head_name(block, i, "wq")), find(head_name(block, i, "wk")),
                         find(head_name(block, i, "wv")), find(head_name(block, i, "wo"))});
  }
  return out;
}

Var activate(const Var& x, Activation a) {
  return a == Activation::kRelu ? ad::relu(x) : ad::tanh(x);
}

void require_both_classes(std::span<const int> labels, const char* where) {
  bool neg = false;
  bool pos = false;
  for (int y : labels) {
    if (y == 1) {
      pos = true;
    } else if (y == -1) {
      neg = true;
    } else {
      throw std::invalid_argument(std::string(where) + ": label " + std::to_string(y) +
                                  " is not -1 or +1");
    }
  }
  if (!neg) throw ModelError(ModelError::Kind::kMissingClass, std::string(where) + ": class -1");
  if (!pos) throw ModelError(ModelError::Kind::kMissingClass, std::string(where) + ": class +1");
}

std::size_t count_small_rows(const Matrix& m) {
  std::size_t n = 0;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double sq = 0.0;
    for (double v : m.row(r)) sq += v * v;
    if (std::sqrt(sq) < kNormFloor) ++n;
  }
  return n;
}

}  // namespace

const char* to_string(Variant v) {
  switch (v) {
    case Variant::kEncoderOnly: return "encoder-only";
    case Variant::kAttention: return "am";
    case Variant::kAnchor: return "aam";
    case Variant::kFull: return "full";
  }
  return "?";
}

Variant variant_from_string(std::string_view s) {
  if (s == "encoder-only" || s == "encoder") return Variant::kEncoderOnly;
  if (s == "am" || s == "+am") return Variant::kAttention;
  if (s == "aam" || s == "+aam") return Variant::kAnchor;
  if (s == "full" || s == "+aam+cam") return Variant::kFull;
  throw std::invalid_argument("unknown variant '" + std::string(s) +
                              "' (expected encoder-only, am, aam, full)");
}

bool uses_reference(Variant v) { return v == Variant::kFull; }

ModelError::ModelError(Kind kind, const std::string& detail)
    : std::runtime_error(
          std::string(kind == Kind::kMissingClass     ? "MissingClass"
                      : kind == Kind::kNonFiniteLoss  ? "NonFiniteLoss"
                                                      : "EmptyReferencePool") +
          ": " + detail),
      kind_(kind) {}

void ModelConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("ModelConfig: " + m); };
  if (input_dim == 0) fail("input_dim must be > 0");
  if (embed_dim == 0) fail("embed_dim must be > 0");
  if (heads == 0) fail("heads must be >= 1");
  if (reference_size == 0) fail("reference_size must be >= 1");
  if (encoder.kind == EncoderKind::kGin) {
    if (encoder.gin_layers == 0) fail("gin_layers must be >= 1");
    if (input_dim != feat::kAtomFeatureDim) {
      fail("gin encoder needs input_dim " + std::to_string(feat::kAtomFeatureDim));
    }
  }
  for (std::size_t w : encoder.hidden) {
    if (w == 0) fail("hidden widths must be > 0");
  }
}

void Params::add(std::string name, Matrix value) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
}

bool Params::contains(std::string_view name) const {
  for (const auto& n : names_) {
    if (n == name) return true;
  }
  return false;
}

Matrix& Params::at(std::string_view name) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return values_[i];
  }
  throw std::out_of_range("no parameter '" + std::string(name) + "'");
}

const Matrix& Params::at(std::string_view name) const {
  return const_cast<Params*>(this)->at(name);
}

bool Params::all_finite() const {
  for (const auto& m : values_) {
    for (double v : m.values()) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

std::size_t Params::scalar_count() const {
  std::size_t n = 0;
  for (const auto& m : values_) n += m.size();
  return n;
}

std::vector<ParamShape> param_layout(const ModelConfig& c) {
  std::vector<ParamShape> out;
  const std::size_t h = c.embed_dim;
  if (c.encoder.kind == EncoderKind::kMlp) {
    std::size_t in = c.input_dim;
    std::vector<std::size_t> widths = c.encoder.hidden;
    widths.push_back(h);
    for (std::size_t l = 0; l < widths.size(); ++l) {
      out.push_back({"encoder.w" + std::to_string(l), in, widths[l], false});
      out.push_back({"encoder.b" + std::to_string(l), 1, widths[l], true});
      in = widths[l];
    }
  } else {
    std::size_t in = c.input_dim;
    for (std::size_t l = 0; l < c.encoder.gin_layers; ++l) {
      const std::string p = "encoder.gin" + std::to_string(l);
      out.push_back({p + ".w0", in, h, false});
      out.push_back({p + ".b0", 1, h, true});
      out.push_back({p + ".w1", h, h, false});
      out.push_back({p + ".b1", 1, h, true});
      in = h;
    }
  }
  switch (c.variant) {
    case Variant::kEncoderOnly:
      break;
    case Variant::kAttention:
      add_attention_layout(out, "am", h, c.resolved_key_dim(), c.heads);
      break;
    case Variant::kFull:
      add_attention_layout(out, "cam", h, c.resolved_key_dim(), c.heads);
      [[fallthrough]];
    case Variant::kAnchor:
      add_attention_layout(out, "aam", 3 * h, c.resolved_key_dim(), c.heads);
      break;
  }
  return out;
}

Params init_params(const ModelConfig& config) {
  config.validate();
  Params params;
  for (const auto& shape : param_layout(config)) {
    Matrix m(shape.rows, shape.cols, 0.0);
    if (!shape.is_bias) {
      Rng rng(derive_seed(config.seed, "init", shape.name));
      const double bound = 1.0 / std::sqrt(static_cast<double>(shape.rows));
      for (double& v : m.values()) v = rng.uniform(-bound, bound);
    }
    params.add(shape.name, std::move(m));
  }
  return params;
}

BoundParams bind_params(Tape& tape, const ModelConfig& config, const Params& params,
                        bool requires_grad) {
  const auto layout = param_layout(config);
  if (layout.size() != params.size()) {
    throw std::invalid_argument("parameter count " + std::to_string(params.size()) +
                                " does not match config (" + std::to_string(layout.size()) + ")");
  }
  BoundParams out;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& want = layout[i];
    if (params.name(i) != want.name) {
      throw std::invalid_argument("parameter " + std::to_string(i) + " is '" + params.name(i) +
                                  "', expected '" + want.name + "'");
    }
    if (params.value(i).rows() != want.rows || params.value(i).cols() != want.cols) {
      throw ad::ShapeError("bind_params:" + want.name, params.value(i).shape_string(),
                           ad::shape_string(want.rows, want.cols));
    }
    out.all.push_back(tape.leaf(params.value(i), requires_grad));
  }

  out.encoder.kind = config.encoder.kind;
  out.encoder.activation = config.encoder.activation;
  std::size_t i = 0;
  for (; i < layout.size() && layout[i].name.starts_with("encoder."); ++i) {
    (layout[i].is_bias ? out.encoder.biases : out.encoder.weights).push_back(out.all[i]);
  }
  out.encoder.gin_layers = config.encoder.kind == EncoderKind::kGin ? config.encoder.gin_layers : 0;

  if (config.variant == Variant::kAttention) {
    out.am = bind_attention(params, out.all, "am", config.heads, config.resolved_key_dim());
  }
  if (config.variant == Variant::kFull) {
    out.cam = bind_attention(params, out.all, "cam", config.heads, config.resolved_key_dim());
  }
  if (config.variant == Variant::kAnchor || config.variant == Variant::kFull) {
    out.aam = bind_attention(params, out.all, "aam", config.heads, config.resolved_key_dim());
  }
  return out;
}

MhaOutput mha(const Var& q, const Var& k, const Var& v, const AttentionParams& params,
              const Matrix* mask) {
  if (params.heads.empty()) throw std::invalid_argument("mha: no heads bound");
  const std::size_t width = params.heads.front().query.rows();
  if (q.cols() != width) throw ad::ShapeError("mha:Q", q.value().shape_string(), "n x " + std::to_string(width));
  if (k.cols() != width) throw ad::ShapeError("mha:K", k.value().shape_string(), "n x " + std::to_string(width));
  if (v.cols() != width) throw ad::ShapeError("mha:V", v.value().shape_string(), "n x " + std::to_string(width));
  if (k.rows() != v.rows()) {
    throw ad::ShapeError("mha:V", v.value().shape_string(),
                         ad::shape_string(k.rows(), width));
  }
  if (mask != nullptr && (mask->rows() != q.rows() || mask->cols() != k.rows())) {
    throw ad::ShapeError("mha:mask", mask->shape_string(), ad::shape_string(q.rows(), k.rows()));
  }

  Tape& tape = *q.tape();
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(params.key_dim));
  Var mask_var;
  if (mask != nullptr) mask_var = tape.constant(*mask);

  // Query-side association costs O(n1 * n2 * width) instead of
  // O(n2 * width * d_k) per head.
  const bool query_side = 4 * q.rows() <= k.rows();
  MhaOutput out;
  for (const auto& head : params.heads) {
    Var logits;
    if (query_side) {
      Var qk = ad::matmul(ad::matmul(q, head.query), ad::transpose(head.key));
      logits = ad::matmul(qk, ad::transpose(k));
    } else {
      logits = ad::matmul(ad::matmul(q, head.query), ad::transpose(ad::matmul(k, head.key)));
    }
    logits = ad::scale(logits, inv_sqrt_dk);
    if (mask != nullptr) logits = ad::add(logits, mask_var);
    Var weights = ad::softmax_rows(logits);
    Var term = query_side
                   ? ad::matmul(ad::matmul(ad::matmul(weights, v), head.value), head.output)
                   : ad::matmul(ad::matmul(weights, ad::matmul(v, head.value)), head.output);
    out.out = out.out.valid() ? ad::add(out.out, term) : term;
    out.weights.push_back(weights);
  }
  return out;
}

Var r_mha(const Var& x, const AttentionParams& params, const Matrix* mask) {
  return ad::add(x, mha(x, x, x, params, mask).out);
}

EncoderInput make_encoder_input(std::span<const data::MoleculeRecord* const> records,
                                const ModelConfig& config) {
  EncoderInput in;
  in.molecules = records.size();
  if (config.encoder.kind == EncoderKind::kMlp) {
    in.features = Matrix(records.size(), config.input_dim);
    for (std::size_t r = 0; r < records.size(); ++r) {
      const auto& f = records[r]->features;
      if (f.size() != config.input_dim) {
        throw ad::ShapeError("encode:" + records[r]->id, "1 x " + std::to_string(f.size()),
                             "1 x " + std::to_string(config.input_dim));
      }
      std::copy(f.begin(), f.end(), in.features.row(r).begin());
    }
    return in;
  }

  in.graph = true;
  std::size_t atoms = 0;
  for (const auto* rec : records) {
    if (!rec->graph) throw std::invalid_argument("gin encoder: record '" + rec->id + "' has no graph");
    atoms += rec->graph->atoms.size();
  }
  in.features = Matrix(atoms, feat::kAtomFeatureDim);
  in.aggregate.rows = in.aggregate.cols = atoms;
  in.aggregate.row_offsets.push_back(0);
  in.pooling.rows = records.size();
  in.pooling.cols = atoms;
  in.pooling.row_offsets.push_back(0);
  const double self = 1.0 + config.encoder.gin_epsilon;
  std::size_t base = 0;
  for (const auto* rec : records) {
    const auto& g = *rec->graph;
    const auto degrees = g.degrees();
    const auto adj = g.adjacency();
    for (std::size_t a = 0; a < g.atoms.size(); ++a) {
      const auto f = feat::atom_features(g.atoms[a], degrees[a]);
      std::copy(f.begin(), f.end(), in.features.row(base + a).begin());
      std::vector<std::size_t> cols = {base + a};
      for (const auto& [nb, order] : adj[a]) cols.push_back(base + nb);
      std::sort(cols.begin(), cols.end());
      for (std::size_t c : cols) {
        in.aggregate.col_indices.push_back(c);
        in.aggregate.values.push_back(c == base + a ? self : 1.0);
      }
      in.aggregate.row_offsets.push_back(in.aggregate.col_indices.size());
      in.pooling.col_indices.push_back(base + a);
      in.pooling.values.push_back(1.0);
    }
    in.pooling.row_offsets.push_back(in.pooling.col_indices.size());
    base += g.atoms.size();
  }
  return in;
}

Var encode(const EncoderParams& encoder, const EncoderInput& input) {
  if (encoder.weights.empty()) throw std::invalid_argument("encode: no encoder parameters");
  Tape& tape = *encoder.weights.front().tape();
  Var x = tape.constant(input.features);
  if (input.graph != (encoder.kind == EncoderKind::kGin)) {
    throw std::invalid_argument("encode: input kind does not match encoder");
  }
  if (encoder.kind == EncoderKind::kMlp) {
    const std::size_t n = encoder.weights.size();
    for (std::size_t l = 0; l < n; ++l) {
      x = ad::add(ad::matmul(x, encoder.weights[l]), encoder.biases[l]);
      if (l + 1 < n) x = activate(x, encoder.activation);
    }
    return x;
  }
  for (std::size_t l = 0; l < encoder.gin_layers; ++l) {
    Var agg = ad::sparse_matmul(input.aggregate, x);
    Var hid = activate(ad::add(ad::matmul(agg, encoder.weights[2 * l]), encoder.biases[2 * l]),
                       encoder.activation);
    x = ad::add(ad::matmul(hid, encoder.weights[2 * l + 1]), encoder.biases[2 * l + 1]);
    if (l + 1 < encoder.gin_layers) x = activate(x, encoder.activation);
  }
  return ad::sparse_matmul(input.pooling, x);
}

Var initial_anchors(const Var& support, std::span<const int> labels) {
  if (labels.size() != support.rows()) {
    throw ad::ShapeError("initial_anchors:labels", std::to_string(labels.size()),
                         std::to_string(support.rows()));
  }
  require_both_classes(labels, "initial_anchors");
  std::vector<unsigned char> neg(labels.size());
  std::vector<unsigned char> pos(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    neg[i] = labels[i] == -1;
    pos[i] = labels[i] == 1;
  }
  return ad::concat_rows(ad::mean_rows_masked(support, neg), ad::mean_rows_masked(support, pos));
}

Var context_augment(const Var& anchors, const Var& reference, const AttentionParams& cam) {
  if (anchors.rows() != 2) {
    throw ad::ShapeError("context_augment:P", anchors.value().shape_string(),
                         ad::shape_string(2, anchors.cols()));
  }
  if (reference.rows() == 0) {
    throw ModelError(ModelError::Kind::kEmptyReferencePool, "context_augment needs M >= 1");
  }
  if (reference.cols() != anchors.cols()) {
    throw ad::ShapeError("context_augment:B'", reference.value().shape_string(),
                         "M x " + std::to_string(anchors.cols()));
  }
  // Only the anchor rows of r_mha([P : B']) are kept, and each output row
  // depends on its own query row, so the reference rows are keys/values only.
  Var keys = ad::concat_rows(anchors, reference);
  return ad::add(anchors, mha(anchors, keys, keys, cam).out);
}

AnchorAugmentOutput anchor_augment(const Var& support, const Var& query, const Var& anchors,
                                   const AttentionParams& aam, bool mask_query_attention) {
  const std::size_t h = support.cols();
  if (query.cols() != h) {
    throw ad::ShapeError("anchor_augment:Q'", query.value().shape_string(),
                         "n x " + std::to_string(h));
  }
  if (anchors.rows() != 2 || anchors.cols() != h) {
    throw ad::ShapeError("anchor_augment:P'", anchors.value().shape_string(), ad::shape_string(2, h));
  }
  const std::size_t ns = support.rows();
  const std::size_t nq = query.rows();
  Var anchor_row = ad::concat_cols(ad::slice_rows(anchors, 0, 1), ad::slice_rows(anchors, 1, 2));
  Var x = ad::concat_rows(support, query);
  Var x2 = ad::concat_cols(x, ad::repeat_rows(anchor_row, ns + nq));

  Matrix mask;
  if (mask_query_attention) {
    mask = Matrix(ns + nq, ns + nq, 0.0);
    for (std::size_t i = ns; i < ns + nq; ++i) {
      for (std::size_t j = ns; j < ns + nq; ++j) {
        if (i != j) mask(i, j) = -std::numeric_limits<double>::infinity();
      }
    }
  }
  MhaOutput att = mha(x2, x2, x2, aam, mask_query_attention ? &mask : nullptr);
  Var y = ad::slice_cols(ad::add(x2, att.out), 0, h);
  AnchorAugmentOutput out;
  out.support = ad::slice_rows(y, 0, ns);
  out.query = ad::slice_rows(y, ns, ns + nq);
  out.weights = std::move(att.weights);
  return out;
}

Var match_predict(const Var& query, const Var& support, std::span<const int> labels,
                  MatchingScale scale, MatchDiagnostics* diagnostics) {
  if (labels.size() != support.rows()) {
    throw ad::ShapeError("match_predict:labels", std::to_string(labels.size()),
                         std::to_string(support.rows()));
  }
  if (query.cols() != support.cols()) {
    throw ad::ShapeError("match_predict:Q*", query.value().shape_string(),
                         "n x " + std::to_string(support.cols()));
  }
  require_both_classes(labels, "match_predict");
  std::size_t n_neg = 0;
  std::size_t n_pos = 0;
  for (int y : labels) (y == 1 ? n_pos : n_neg) += 1;
  Matrix coef(labels.size(), 1);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    coef(i, 0) = labels[i] == 1 ? 1.0 / static_cast<double>(n_pos)
                                : -1.0 / static_cast<double>(n_neg);
  }
  if (diagnostics != nullptr) {
    diagnostics->zero_vectors = count_small_rows(query.value()) + count_small_rows(support.value());
  }
  Tape& tape = *query.tape();
  Var cos = ad::matmul(ad::l2_normalize_rows(query, kNormFloor),
                       ad::transpose(ad::l2_normalize_rows(support, kNormFloor)));
  Var logit = ad::matmul(cos, tape.constant(std::move(coef)));
  if (scale == MatchingScale::kPaper) {
    logit = ad::scale(logit, 1.0 / std::sqrt(2.0 * static_cast<double>(support.cols())));
  }
  return ad::sigmoid(logit);
}

Var bce_loss(const Var& probs, std::span<const int> labels) {
  return ad::binary_cross_entropy(probs, labels, 1e-12);
}

EpisodeInput make_episode_input(const data::Episode& episode, const ModelConfig& config,
                                bool with_reference) {
  EpisodeInput in;
  std::vector<const data::MoleculeRecord*> labeled(episode.support);
  labeled.insert(labeled.end(), episode.query.begin(), episode.query.end());
  in.labeled = make_encoder_input(labeled, config);
  if (with_reference) in.reference = make_encoder_input(episode.reference, config);
  in.n_support = episode.support.size();
  in.n_query = episode.query.size();
  in.n_reference = with_reference ? episode.reference.size() : 0;
  in.support_labels = episode.support_labels();
  in.query_labels = episode.query_labels();
  return in;
}

ForwardResult forward_episode(const EpisodeInput& input, const BoundParams& params,
                              const ModelConfig& config, Variant variant) {
  ForwardResult r;
  const std::size_t ns = input.n_support;
  const std::size_t nq = input.n_query;
  Var labeled = encode(params.encoder, input.labeled);
  r.support_embedding = ad::slice_rows(labeled, 0, ns);
  r.query_embedding = ad::slice_rows(labeled, ns, ns + nq);

  switch (variant) {
    case Variant::kEncoderOnly:
      r.support_star = r.support_embedding;
      r.query_star = r.query_embedding;
      break;
    case Variant::kAttention: {
      Matrix mask;
      if (config.mask_query_attention) {
        mask = Matrix(ns + nq, ns + nq, 0.0);
        for (std::size_t i = ns; i < ns + nq; ++i) {
          for (std::size_t j = ns; j < ns + nq; ++j) {
            if (i != j) mask(i, j) = -std::numeric_limits<double>::infinity();
          }
        }
      }
      MhaOutput att = mha(labeled, labeled, labeled, params.am,
                          config.mask_query_attention ? &mask : nullptr);
      Var y = ad::add(labeled, att.out);
      r.support_star = ad::slice_rows(y, 0, ns);
      r.query_star = ad::slice_rows(y, ns, ns + nq);
      r.attention = std::move(att.weights);
      break;
    }
    case Variant::kAnchor:
    case Variant::kFull: {
      r.anchors = initial_anchors(r.support_embedding, input.support_labels);
      Var anchors = r.anchors;
      if (variant == Variant::kFull) {
        if (input.n_reference == 0) {
          throw ModelError(ModelError::Kind::kEmptyReferencePool,
                           "the full variant needs a reference batch");
        }
        r.reference_embedding = encode(params.encoder, input.reference);
        r.augmented_anchors = context_augment(r.anchors, r.reference_embedding, params.cam);
        anchors = r.augmented_anchors;
      }
      AnchorAugmentOutput aug = anchor_augment(r.support_embedding, r.query_embedding, anchors,
                                               params.aam, config.mask_query_attention);
      r.support_star = aug.support;
      r.query_star = aug.query;
      r.attention = std::move(aug.weights);
      break;
    }
  }
  r.probs = match_predict(r.query_star, r.support_star, input.support_labels,
                          config.matching_scale, &r.diagnostics);
  return r;
}

std::vector<double> predict(const Model& model, const data::Episode& episode) {
  Tape tape;
  BoundParams bound = bind_params(tape, model.config, model.params, false);
  EpisodeInput input = make_episode_input(episode, model.config);
  ForwardResult r = forward_episode(input, bound, model.config);
  const auto v = r.probs.value().values();
  return {v.begin(), v.end()};
}

}  // namespace cra::model
