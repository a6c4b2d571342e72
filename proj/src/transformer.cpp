#include "ctxmt/transformer.hpp"

#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "ctxmt/errors.hpp"

namespace ctxmt {

void ToyTransformerConfig::validate() const {
  if (layers == 0 || heads == 0 || model_dim == 0 || ff_dim == 0 || max_positions == 0) {
    throw ConfigError("transformer dimensions must be positive");
  }
  if (model_dim % heads != 0) {
    throw ConfigError("model_dim " + std::to_string(model_dim) + " is not divisible by heads " +
                      std::to_string(heads));
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
}

void to_json(nlohmann::json& j, const ToyTransformerConfig& cfg) {
  j = nlohmann::json{{"layers", cfg.layers},       {"heads", cfg.heads},
                     {"model_dim", cfg.model_dim}, {"ff_dim", cfg.ff_dim},
                     {"max_positions", cfg.max_positions}, {"dropout", cfg.dropout}};
}

void from_json(const nlohmann::json& j, ToyTransformerConfig& cfg) {
  cfg.layers = j.value("layers", cfg.layers);
  cfg.heads = j.value("heads", cfg.heads);
  cfg.model_dim = j.value("model_dim", cfg.model_dim);
  cfg.ff_dim = j.value("ff_dim", cfg.ff_dim);
  cfg.max_positions = j.value("max_positions", cfg.max_positions);
  cfg.dropout = j.value("dropout", cfg.dropout);
}

namespace {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMap = Eigen::Map<const Mat>;
using MMap = Eigen::Map<Mat>;
using CRow = Eigen::Map<const Eigen::RowVectorXd>;
using MRow = Eigen::Map<Eigen::RowVectorXd>;

constexpr double kLnEps = 1e-5;

struct LayerNormP {
  ParamTensor g, b;
};
struct AttentionP {
  ParamTensor wq, bq, wk, bk, wv, bv, wo, bo;
};
struct FeedForwardP {
  ParamTensor w1, b1, w2, b2;
};
struct EncoderLayerP {
  LayerNormP ln1;
  AttentionP attn;
  LayerNormP ln2;
  FeedForwardP ff;
};
struct DecoderLayerP {
  LayerNormP ln1;
  AttentionP self;
  LayerNormP ln2;
  AttentionP cross;
  LayerNormP ln3;
  FeedForwardP ff;
};

struct Layout {
  ParamTensor embed, out_bias;
  std::vector<EncoderLayerP> enc;
  LayerNormP enc_ln;
  std::vector<DecoderLayerP> dec;
  LayerNormP dec_ln;
  std::vector<ParamTensor> all;
  std::size_t total = 0;
};

class LayoutBuilder {
 public:
  Layout layout;

  ParamTensor add(const std::string& name, std::size_t rows, std::size_t cols) {
    ParamTensor t{name, layout.total, rows, cols};
    layout.total += rows * cols;
    layout.all.push_back(t);
    return t;
  }
  LayerNormP layer_norm(const std::string& name, std::size_t d) {
    return {add(name + ".g", 1, d), add(name + ".b", 1, d)};
  }
  AttentionP attention(const std::string& name, std::size_t d) {
    AttentionP a;
    a.wq = add(name + ".wq", d, d);
    a.bq = add(name + ".bq", 1, d);
    a.wk = add(name + ".wk", d, d);
    a.bk = add(name + ".bk", 1, d);
    a.wv = add(name + ".wv", d, d);
    a.bv = add(name + ".bv", 1, d);
    a.wo = add(name + ".wo", d, d);
    a.bo = add(name + ".bo", 1, d);
    return a;
  }
  FeedForwardP feed_forward(const std::string& name, std::size_t d, std::size_t f) {
    return {add(name + ".w1", d, f), add(name + ".b1", 1, f), add(name + ".w2", f, d),
            add(name + ".b2", 1, d)};
  }
};

Layout make_layout(const ToyTransformerConfig& cfg, std::size_t vocab) {
  LayoutBuilder b;
  const std::size_t d = cfg.model_dim;
  b.layout.embed = b.add("embed", vocab, d);
  b.layout.out_bias = b.add("out_bias", 1, vocab);
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const std::string n = "enc." + std::to_string(l);
    EncoderLayerP p;
    p.ln1 = b.layer_norm(n + ".ln1", d);
    p.attn = b.attention(n + ".attn", d);
    p.ln2 = b.layer_norm(n + ".ln2", d);
    p.ff = b.feed_forward(n + ".ff", d, cfg.ff_dim);
    b.layout.enc.push_back(p);
  }
  b.layout.enc_ln = b.layer_norm("enc.ln", d);
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const std::string n = "dec." + std::to_string(l);
    DecoderLayerP p;
    p.ln1 = b.layer_norm(n + ".ln1", d);
    p.self = b.attention(n + ".self", d);
    p.ln2 = b.layer_norm(n + ".ln2", d);
    p.cross = b.attention(n + ".cross", d);
    p.ln3 = b.layer_norm(n + ".ln3", d);
    p.ff = b.feed_forward(n + ".ff", d, cfg.ff_dim);
    b.layout.dec.push_back(p);
  }
  b.layout.dec_ln = b.layer_norm("dec.ln", d);
  return std::move(b.layout);
}

// Parameter values and (optionally) gradient buffer for one pass.
struct Params {
  const double* value;
  double* grad;  // null when no gradient is wanted

  CMap m(const ParamTensor& t) const {
    return {value + t.offset, static_cast<Eigen::Index>(t.rows), static_cast<Eigen::Index>(t.cols)};
  }
  CRow r(const ParamTensor& t) const { return {value + t.offset, static_cast<Eigen::Index>(t.cols)}; }
  MMap gm(const ParamTensor& t) const {
    return {grad + t.offset, static_cast<Eigen::Index>(t.rows), static_cast<Eigen::Index>(t.cols)};
  }
  MRow gr(const ParamTensor& t) const { return {grad + t.offset, static_cast<Eigen::Index>(t.cols)}; }
};

// ---- layer norm ----

struct LnCache {
  Mat xhat;
  Vec rstd;
};

Mat ln_forward(const Mat& x, const LayerNormP& p, const Params& P, LnCache& c) {
  const auto n = x.rows();
  c.xhat.resize(n, x.cols());
  c.rstd.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double mu = x.row(r).mean();
    const double var = (x.row(r).array() - mu).square().mean();
    c.rstd(r) = 1.0 / std::sqrt(var + kLnEps);
    c.xhat.row(r) = (x.row(r).array() - mu) * c.rstd(r);
  }
  Mat y = c.xhat;
  y.array().rowwise() *= P.r(p.g).array();
  y.rowwise() += P.r(p.b);
  return y;
}

Mat ln_backward(const Mat& dy, const LayerNormP& p, const Params& P, const LnCache& c) {
  P.gr(p.g) += (dy.array() * c.xhat.array()).colwise().sum().matrix();
  P.gr(p.b) += dy.colwise().sum();
  Mat dxhat = dy;
  dxhat.array().rowwise() *= P.r(p.g).array();
  Mat dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const double mean_d = dxhat.row(r).mean();
    const double mean_dx = dxhat.row(r).cwiseProduct(c.xhat.row(r)).mean();
    dx.row(r) = c.rstd(r) * (dxhat.row(r).array() - mean_d - c.xhat.row(r).array() * mean_dx).matrix();
  }
  return dx;
}

// ---- linear ----

Mat linear(const Mat& x, const ParamTensor& w, const ParamTensor& b, const Params& P) {
  Mat y = x * P.m(w);
  y.rowwise() += P.r(b);
  return y;
}

Mat linear_backward(const Mat& dy, const Mat& x, const ParamTensor& w, const ParamTensor& b,
                    const Params& P) {
  P.gm(w).noalias() += x.transpose() * dy;
  P.gr(b) += dy.colwise().sum();
  return dy * P.m(w).transpose();
}

// ---- multi-head attention ----

struct AttnCache {
  Mat xq, xkv, q, k, v, o;
  std::vector<Mat> probs;
};

Mat attn_forward(const Mat& xq, const Mat& xkv, bool causal, std::size_t heads,
                 const AttentionP& p, const Params& P, AttnCache& c) {
  c.xq = xq;
  c.xkv = xkv;
  c.q = linear(xq, p.wq, p.bq, P);
  c.k = linear(xkv, p.wk, p.bk, P);
  c.v = linear(xkv, p.wv, p.bv, P);
  const auto d = c.q.cols();
  const auto dh = d / static_cast<Eigen::Index>(heads);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const auto tq = xq.rows();
  const auto tk = xkv.rows();
  c.o.resize(tq, d);
  c.probs.resize(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    const auto col = static_cast<Eigen::Index>(h) * dh;
    Mat s = (c.q.middleCols(col, dh) * c.k.middleCols(col, dh).transpose()) * scale;
    for (Eigen::Index i = 0; i < tq; ++i) {
      const Eigen::Index visible = causal ? std::min<Eigen::Index>(i + 1, tk) : tk;
      const double m = s.row(i).head(visible).maxCoeff();
      double z = 0.0;
      for (Eigen::Index j = 0; j < tk; ++j) {
        const double e = j < visible ? std::exp(s(i, j) - m) : 0.0;
        s(i, j) = e;
        z += e;
      }
      s.row(i) /= z;
    }
    c.o.middleCols(col, dh) = s * c.v.middleCols(col, dh);
    c.probs[h] = std::move(s);
  }
  return linear(c.o, p.wo, p.bo, P);
}

// Returns (d xq, d xkv).
std::pair<Mat, Mat> attn_backward(const Mat& dout, std::size_t heads, const AttentionP& p,
                                  const Params& P, const AttnCache& c) {
  Mat d_o = linear_backward(dout, c.o, p.wo, p.bo, P);
  const auto d = c.q.cols();
  const auto dh = d / static_cast<Eigen::Index>(heads);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Mat dq(c.q.rows(), d), dk(c.k.rows(), d), dv(c.v.rows(), d);
  for (std::size_t h = 0; h < heads; ++h) {
    const auto col = static_cast<Eigen::Index>(h) * dh;
    const Mat& prob = c.probs[h];
    Mat dp = d_o.middleCols(col, dh) * c.v.middleCols(col, dh).transpose();
    dv.middleCols(col, dh).noalias() = prob.transpose() * d_o.middleCols(col, dh);
    Eigen::VectorXd rowdot = (dp.array() * prob.array()).rowwise().sum();
    Mat ds = (prob.array() * (dp.array().colwise() - rowdot.array())).matrix() * scale;
    dq.middleCols(col, dh).noalias() = ds * c.k.middleCols(col, dh);
    dk.middleCols(col, dh).noalias() = ds.transpose() * c.q.middleCols(col, dh);
  }
  Mat dxq = linear_backward(dq, c.xq, p.wq, p.bq, P);
  Mat dxkv = linear_backward(dk, c.xkv, p.wk, p.bk, P);
  dxkv += linear_backward(dv, c.xkv, p.wv, p.bv, P);
  return {std::move(dxq), std::move(dxkv)};
}

// ---- feed-forward ----

struct FfCache {
  Mat x, pre, act;
};

Mat ff_forward(const Mat& x, const FeedForwardP& p, const Params& P, FfCache& c) {
  c.x = x;
  c.pre = linear(x, p.w1, p.b1, P);
  c.act = c.pre.cwiseMax(0.0);
  return linear(c.act, p.w2, p.b2, P);
}

Mat ff_backward(const Mat& dy, const FeedForwardP& p, const Params& P, const FfCache& c) {
  Mat dact = linear_backward(dy, c.act, p.w2, p.b2, P);
  dact = (c.pre.array() > 0.0).select(dact, 0.0);
  return linear_backward(dact, c.x, p.w1, p.b1, P);
}

// ---- dropout ----

struct Dropout {
  double rate = 0.0;
  Rng* rng = nullptr;

  bool active() const { return rng != nullptr && rate > 0.0; }

  Mat apply(const Mat& x, Mat& mask) const {
    if (!active()) {
      mask.resize(0, 0);
      return x;
    }
    mask.resize(x.rows(), x.cols());
    const double keep = 1.0 / (1.0 - rate);
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      for (Eigen::Index i = 0; i < x.rows(); ++i) mask(i, j) = rng->bernoulli(rate) ? 0.0 : keep;
    }
    return x.cwiseProduct(mask);
  }

  static Mat back(const Mat& dy, const Mat& mask) {
    return mask.size() == 0 ? dy : dy.cwiseProduct(mask);
  }
};

// ---- full model ----

struct EncLayerCache {
  LnCache ln1, ln2;
  AttnCache attn;
  FfCache ff;
  Mat drop1, drop2;
};

struct DecLayerCache {
  LnCache ln1, ln2, ln3;
  AttnCache self, cross;
  FfCache ff;
  Mat drop1, drop2, drop3;
};

struct ForwardCache {
  TokenSeq enc_ids, dec_ids;
  Mat enc_drop, dec_drop;
  std::vector<EncLayerCache> enc;
  LnCache enc_ln;
  Mat memory;
  std::vector<DecLayerCache> dec;
  LnCache dec_ln;
  Mat hidden;  // scored rows of the final decoder states
  std::size_t first_scored = 0;
};

Mat positional(std::size_t len, std::size_t d) {
  Mat pe(static_cast<Eigen::Index>(len), static_cast<Eigen::Index>(d));
  for (std::size_t pos = 0; pos < len; ++pos) {
    for (std::size_t i = 0; i < d; i += 2) {
      const double angle =
          static_cast<double>(pos) / std::pow(10000.0, static_cast<double>(i) / static_cast<double>(d));
      pe(static_cast<Eigen::Index>(pos), static_cast<Eigen::Index>(i)) = std::sin(angle);
      if (i + 1 < d) pe(static_cast<Eigen::Index>(pos), static_cast<Eigen::Index>(i + 1)) = std::cos(angle);
    }
  }
  return pe;
}

Mat embed(const TokenSeq& ids, const Layout& L, const Params& P, std::size_t d) {
  const double scale = std::sqrt(static_cast<double>(d));
  Mat x(static_cast<Eigen::Index>(ids.size()), static_cast<Eigen::Index>(d));
  const CMap e = P.m(L.embed);
  for (std::size_t t = 0; t < ids.size(); ++t) x.row(static_cast<Eigen::Index>(t)) = e.row(ids[t]) * scale;
  return x + positional(ids.size(), d);
}

void embed_backward(const Mat& dx, const TokenSeq& ids, const Layout& L, const Params& P, std::size_t d) {
  const double scale = std::sqrt(static_cast<double>(d));
  MMap ge = P.gm(L.embed);
  for (std::size_t t = 0; t < ids.size(); ++t) ge.row(ids[t]) += dx.row(static_cast<Eigen::Index>(t)) * scale;
}

void check_ids(const TokenSeq& ids, std::size_t vocab, std::size_t max_positions, const char* stream) {
  if (ids.size() > max_positions) {
    throw DataError(std::string(stream) + " input of " + std::to_string(ids.size()) +
                    " tokens exceeds max_positions " + std::to_string(max_positions));
  }
  for (TokenId id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw DataError(std::string(stream) + " token id " + std::to_string(id) +
                      " is outside the model vocabulary");
    }
  }
}

// Returns the logits of the scored rows.
Mat forward(const TranslationExample& ex, const ToyTransformerConfig& cfg, std::size_t vocab,
            const Layout& L, const Params& P, const Dropout& drop, ForwardCache& c) {
  const std::size_t d = cfg.model_dim;
  c.enc_ids = encoder_input(ex);
  auto layout = decoder_layout(ex);
  c.dec_ids = std::move(layout.input);
  c.first_scored = layout.first_scored;
  check_ids(c.enc_ids, vocab, cfg.max_positions, "encoder");
  check_ids(c.dec_ids, vocab, cfg.max_positions, "decoder");

  Mat x = drop.apply(embed(c.enc_ids, L, P, d), c.enc_drop);
  c.enc.resize(cfg.layers);
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    auto& lc = c.enc[l];
    const auto& lp = L.enc[l];
    Mat a = ln_forward(x, lp.ln1, P, lc.ln1);
    x += drop.apply(attn_forward(a, a, false, cfg.heads, lp.attn, P, lc.attn), lc.drop1);
    Mat b = ln_forward(x, lp.ln2, P, lc.ln2);
    x += drop.apply(ff_forward(b, lp.ff, P, lc.ff), lc.drop2);
  }
  c.memory = ln_forward(x, L.enc_ln, P, c.enc_ln);

  Mat z = drop.apply(embed(c.dec_ids, L, P, d), c.dec_drop);
  c.dec.resize(cfg.layers);
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    auto& lc = c.dec[l];
    const auto& lp = L.dec[l];
    Mat a = ln_forward(z, lp.ln1, P, lc.ln1);
    z += drop.apply(attn_forward(a, a, true, cfg.heads, lp.self, P, lc.self), lc.drop1);
    Mat b = ln_forward(z, lp.ln2, P, lc.ln2);
    z += drop.apply(attn_forward(b, c.memory, false, cfg.heads, lp.cross, P, lc.cross), lc.drop2);
    Mat e = ln_forward(z, lp.ln3, P, lc.ln3);
    z += drop.apply(ff_forward(e, lp.ff, P, lc.ff), lc.drop3);
  }
  Mat h = ln_forward(z, L.dec_ln, P, c.dec_ln);
  const auto scored = h.rows() - static_cast<Eigen::Index>(c.first_scored);
  c.hidden = h.bottomRows(scored);
  Mat logits = c.hidden * P.m(L.embed).transpose();
  logits.rowwise() += P.r(L.out_bias);
  (void)vocab;
  return logits;
}

void backward(const Mat& dlogits, const ToyTransformerConfig& cfg, const Layout& L,
              const Params& P, const ForwardCache& c) {
  const std::size_t d = cfg.model_dim;
  P.gm(L.embed).noalias() += dlogits.transpose() * c.hidden;
  P.gr(L.out_bias) += dlogits.colwise().sum();

  const auto total_rows = static_cast<Eigen::Index>(c.dec_ids.size());
  Mat dh = Mat::Zero(total_rows, static_cast<Eigen::Index>(d));
  dh.bottomRows(dlogits.rows()) = dlogits * P.m(L.embed);

  Mat dz = ln_backward(dh, L.dec_ln, P, c.dec_ln);
  Mat dmem = Mat::Zero(c.memory.rows(), c.memory.cols());
  for (std::size_t l = cfg.layers; l-- > 0;) {
    const auto& lc = c.dec[l];
    const auto& lp = L.dec[l];
    dz += ln_backward(ff_backward(Dropout::back(dz, lc.drop3), lp.ff, P, lc.ff), lp.ln3, P, lc.ln3);
    auto [dq, dkv] = attn_backward(Dropout::back(dz, lc.drop2), cfg.heads, lp.cross, P, lc.cross);
    dmem += dkv;
    dz += ln_backward(dq, lp.ln2, P, lc.ln2);
    auto [sq, skv] = attn_backward(Dropout::back(dz, lc.drop1), cfg.heads, lp.self, P, lc.self);
    dz += ln_backward(sq + skv, lp.ln1, P, lc.ln1);
  }
  embed_backward(Dropout::back(dz, c.dec_drop), c.dec_ids, L, P, d);

  Mat dx = ln_backward(dmem, L.enc_ln, P, c.enc_ln);
  for (std::size_t l = cfg.layers; l-- > 0;) {
    const auto& lc = c.enc[l];
    const auto& lp = L.enc[l];
    dx += ln_backward(ff_backward(Dropout::back(dx, lc.drop2), lp.ff, P, lc.ff), lp.ln2, P, lc.ln2);
    auto [aq, akv] = attn_backward(Dropout::back(dx, lc.drop1), cfg.heads, lp.attn, P, lc.attn);
    dx += ln_backward(aq + akv, lp.ln1, P, lc.ln1);
  }
  embed_backward(Dropout::back(dx, c.enc_drop), c.enc_ids, L, P, d);
}

Mat log_softmax_rows(const Mat& logits) {
  Mat out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    const double lse = m + std::log((logits.row(r).array() - m).exp().sum());
    out.row(r) = logits.row(r).array() - lse;
  }
  return out;
}

// Loss and d(loss)/d(logits) for label-smoothed cross-entropy.
LossStats smoothed_loss(const Mat& logp, const TokenSeq& labels, double eps, Mat* dlogits) {
  LossStats stats;
  const auto v = logp.cols();
  const double off = eps / static_cast<double>(v);
  if (dlogits != nullptr) *dlogits = logp.array().exp();
  for (Eigen::Index r = 0; r < logp.rows(); ++r) {
    const TokenId y = labels[static_cast<std::size_t>(r)];
    const double nll = -logp(r, y);
    stats.nll_sum += nll;
    stats.loss_sum += (1.0 - eps) * nll - off * logp.row(r).sum();
    if (dlogits != nullptr) {
      dlogits->row(r).array() -= off;
      (*dlogits)(r, y) -= 1.0 - eps;
    }
  }
  stats.tokens = static_cast<std::size_t>(logp.rows());
  return stats;
}

}  // namespace

ToyTransformer::ToyTransformer(ToyTransformerConfig cfg, std::size_t vocab_size,
                               std::uint64_t init_seed)
    : cfg_(cfg), vocab_size_(vocab_size) {
  cfg_.validate();
  if (vocab_size_ <= special::kCount) throw ConfigError("vocabulary too small for a model");
  const Layout L = make_layout(cfg_, vocab_size_);
  tensors_ = L.all;
  params_.assign(L.total, 0.0);
  Rng rng(init_seed);
  for (const auto& t : tensors_) {
    const bool is_ln_gain = t.name.size() > 2 && t.name.compare(t.name.size() - 2, 2, ".g") == 0;
    const bool is_bias = t.rows == 1 && !is_ln_gain;
    if (is_ln_gain) {
      std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(t.offset), t.size(), 1.0);
    } else if (!is_bias) {
      // embed is vocab x d and scaled by sqrt(d) on input; others are fan_in x fan_out.
      const double fan_in = t.name == "embed" ? static_cast<double>(t.cols) : static_cast<double>(t.rows);
      const double stddev = 1.0 / std::sqrt(fan_in);
      for (std::size_t i = 0; i < t.size(); ++i) params_[t.offset + i] = rng.normal(0.0, stddev);
    }
  }
}

ToyTransformer::ToyTransformer(ToyTransformerConfig cfg, std::size_t vocab_size,
                               std::vector<double> params)
    : cfg_(cfg), vocab_size_(vocab_size), params_(std::move(params)) {
  cfg_.validate();
  const Layout L = make_layout(cfg_, vocab_size_);
  tensors_ = L.all;
  if (params_.size() != L.total) {
    throw DataError("parameter vector has " + std::to_string(params_.size()) + " values, expected " +
                    std::to_string(L.total));
  }
}

LogProbMatrix ToyTransformer::log_distributions(const TranslationExample& ex) const {
  const Layout L = make_layout(cfg_, vocab_size_);
  ForwardCache cache;
  const Params P{params_.data(), nullptr};
  const Mat logits = forward(ex, cfg_, vocab_size_, L, P, Dropout{}, cache);
  return log_softmax_rows(logits);
}

std::vector<bool> ToyTransformer::relu_pattern(const TranslationExample& ex) const {
  const Layout L = make_layout(cfg_, vocab_size_);
  ForwardCache cache;
  const Params P{params_.data(), nullptr};
  forward(ex, cfg_, vocab_size_, L, P, Dropout{}, cache);
  std::vector<bool> out;
  auto add = [&](const FfCache& c) {
    for (Eigen::Index i = 0; i < c.pre.size(); ++i) out.push_back(c.pre.data()[i] > 0.0);
  };
  for (const auto& lc : cache.enc) add(lc.ff);
  for (const auto& lc : cache.dec) add(lc.ff);
  return out;
}

LossStats ToyTransformer::accumulate_gradient(const TranslationExample& ex, double label_smoothing,
                                              std::span<double> grad, Rng* dropout_rng) const {
  if (grad.size() != params_.size()) throw ConfigError("gradient buffer has the wrong size");
  const Layout L = make_layout(cfg_, vocab_size_);
  ForwardCache cache;
  const Params P{params_.data(), grad.data()};
  const Mat logits = forward(ex, cfg_, vocab_size_, L, P, Dropout{cfg_.dropout, dropout_rng}, cache);
  TokenSeq labels = ex.tgt;
  labels.push_back(special::kEos);
  Mat dlogits;
  const LossStats stats = smoothed_loss(log_softmax_rows(logits), labels, label_smoothing, &dlogits);
  backward(dlogits, cfg_, L, P, cache);
  return stats;
}

LossStats ToyTransformer::evaluate_loss(const TranslationExample& ex, double label_smoothing) const {
  TokenSeq labels = ex.tgt;
  labels.push_back(special::kEos);
  const LogProbMatrix lp = log_distributions(ex);
  return smoothed_loss(lp, labels, label_smoothing, nullptr);
}

}  // namespace ctxmt
