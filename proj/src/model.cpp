// Copyright 2026 The cdg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cdg/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <zlib.h>

#include "cdg/align.hpp"
#include "cdg/error.hpp"
#include "json.hpp"

namespace cdg {

namespace {

using json = nlohmann::json;

void xavier(Matrix& w, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
}

double log_sum_exp(const Logits& z) {
  const double m = z.maxCoeff();
  return m + std::log((z.array() - m).exp().sum());
}

// Adds -log softmax(z)[y] * weight to *loss; returns weight * (softmax(z) - onehot(y)).
Logits ce_grad(const Logits& z, Label y, double weight, double* loss) {
  const int yi = label_index(y);
  *loss += weight * (log_sum_exp(z) - z[yi]);
  Logits g = softmax(z);
  g[yi] -= 1.0;
  return weight * g;
}

// Cross-entropy against a soft target q; gradient is softmax(z) - q.
Logits soft_ce_grad(const Logits& z, const Logits& q, double weight, double* loss) {
  const Logits logp = z.array() - log_sum_exp(z);
  *loss -= weight * q.dot(logp);
  return weight * (softmax(z) - q);
}

Logits dtanh(const Logits& z) { return (1.0 - z.array().tanh().square()).matrix(); }

void check_labels(const std::vector<Label>& ys, std::string_view what) {
  if (ys.empty()) throw Error(ErrorCode::kDegenerateDataset, std::string(what) + " set is empty");
  const std::set<Label> distinct(ys.begin(), ys.end());
  if (distinct.size() < 2) {
    throw Error(ErrorCode::kDegenerateDataset,
                std::string(what) + " labels cover a single class (" +
                    std::string(label_name(*distinct.begin())) + ")");
  }
}

struct ParamRef {
  double* data;
  Eigen::Index size;
  bool decay;
};

template <typename M>
void push(std::vector<ParamRef>& out, M& m, bool decay) {
  out.push_back(ParamRef{m.data(), m.size(), decay});
}

std::vector<ParamRef> param_refs(ClassifierParams& p) {
  std::vector<ParamRef> out;
  push(out, p.W, true);
  push(out, p.b, false);
  return out;
}

std::vector<ParamRef> param_refs(AbsaModel& m) {
  std::vector<ParamRef> out;
  push(out, m.encoder.W1, true);
  push(out, m.encoder.W2, true);
  push(out, m.aspect_head.W, true);
  push(out, m.aspect_head.b, false);
  push(out, m.knowledge_head.W, true);
  push(out, m.knowledge_head.b, false);
  if (auto* h = std::get_if<LinearHead>(&m.review_head)) {
    push(out, h->W, true);
    push(out, h->b, false);
  } else {
    // mu is a running statistic, not a parameter.
    push(out, std::get<BackdoorHead>(m.review_head).weights, true);
  }
  if (m.baselines) {
    push(out, m.baselines->c_a, false);
    push(out, m.baselines->c_r, false);
    push(out, m.baselines->c_k, false);
  }
  return out;
}

class OptimizerState {
 public:
  explicit OptimizerState(const TrainConfig& cfg) : cfg_(cfg) {}

  void step(const std::vector<ParamRef>& params, const std::vector<ParamRef>& grads) {
    if (moments_m_.empty()) {
      for (const auto& p : params) {
        moments_m_.push_back(Vector::Zero(p.size));
        moments_v_.push_back(Vector::Zero(p.size));
      }
    }
    ++t_;
    const double lr = cfg_.learning_rate;
    const double wd = cfg_.weight_decay;
    constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
      Eigen::Map<Vector> theta(params[k].data, params[k].size);
      Eigen::Map<const Vector> g(grads[k].data, grads[k].size);
      const double decay = params[k].decay ? wd : 0.0;
      if (cfg_.optimizer == Optimizer::kSgd) {
        theta -= lr * (g + decay * theta);
      } else {
        Vector& m = moments_m_[k];
        Vector& v = moments_v_[k];
        m = kBeta1 * m + (1.0 - kBeta1) * g;
        v = kBeta2 * v + (1.0 - kBeta2) * g.cwiseAbs2();
        const Vector upd =
            (m.array() / c1) / ((v.array() / c2).sqrt() + kEps) + decay * theta.array();
        theta -= lr * upd;
      }
    }
  }

 private:
  const TrainConfig& cfg_;
  std::vector<Vector> moments_m_, moments_v_;
  std::size_t t_ = 0;
};

std::vector<std::size_t> shuffled(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

void check_dim(const Vector& x, std::size_t expected, std::string_view what) {
  if (static_cast<std::size_t>(x.size()) != expected) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + " has dimension " + std::to_string(x.size()) +
                    ", model expects " + std::to_string(expected));
  }
}

}  // namespace

std::string_view optimizer_name(Optimizer o) { return o == Optimizer::kSgd ? "sgd" : "adamw"; }

void TrainConfig::validate() const {
  auto bad = [](const std::string& msg) { throw Error(ErrorCode::kInvalidArgument, msg); };
  if (!(learning_rate > 0) || !std::isfinite(learning_rate)) bad("learning_rate must be > 0");
  if (batch_size == 0) bad("batch_size must be >= 1");
  if (!(weight_decay >= 0)) bad("weight_decay must be >= 0");
  if (!(tau > 0)) bad("tau must be > 0");
  if (!(epsilon > 0)) bad("epsilon must be > 0");
  if (!(momentum_m >= 0 && momentum_m < 1)) bad("momentum_m must be in [0, 1)");
  if (hidden == 0 || d_rep == 0) bad("hidden and d_rep must be >= 1");
  if (strata_K == 0 || d_rep % strata_K != 0) {
    bad("strata_K (" + std::to_string(strata_K) + ") must divide d_rep (" +
        std::to_string(d_rep) + ")");
  }
  for (double w : branch_loss_weights) {
    if (!(w >= 0)) bad("branch_loss_weights must be >= 0");
  }
  if (!(counterfactual_weight >= 0)) bad("counterfactual_weight must be >= 0");
}

std::optional<std::size_t> steps_to_threshold(const TrainTrace& t, double threshold) {
  for (const auto& r : t.records) {
    if (r.val_accuracy >= threshold) return r.step;
  }
  return std::nullopt;
}

StopwordSet TextSettings::stopword_set() const { return make_stopwords(stopwords); }

// ---------------------------------------------------------------------------
// Classifier

ClassifierParams init_classifier(std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ClassifierParams p;
  p.W = Matrix::Zero(kNumClasses, static_cast<Eigen::Index>(dim));
  xavier(p.W, rng);
  return p;
}

ClassPrediction predict_embedding(const ClassifierParams& p, const Vector& x) {
  check_dim(x, static_cast<std::size_t>(p.W.cols()), "embedding");
  ClassPrediction out;
  const Logits z = p.W * x + p.b;
  out.probabilities = softmax(z);
  out.label = argmax_label(z);
  return out;
}

ClassPrediction predict(const ClassifierParams& p, std::string_view text,
                        const Embedder& embedder) {
  return predict_embedding(p, embedder.embed(preprocess(text, p.text.stopword_set())));
}

double classifier_loss(const ClassifierParams& p, const std::vector<Vector>& xs,
                       const std::vector<Label>& ys, ClassifierParams* grad) {
  if (xs.size() != ys.size()) throw Error(ErrorCode::kInvalidArgument, "xs/ys size mismatch");
  if (xs.empty()) throw Error(ErrorCode::kInvalidArgument, "empty batch");
  const double inv = 1.0 / static_cast<double>(xs.size());
  if (grad) {
    grad->W = Matrix::Zero(p.W.rows(), p.W.cols());
    grad->b = Logits::Zero();
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    check_dim(xs[i], static_cast<std::size_t>(p.W.cols()), "embedding");
    const Logits g = ce_grad(p.W * xs[i] + p.b, ys[i], inv, &loss);
    if (grad) {
      grad->W.noalias() += g * xs[i].transpose();
      grad->b += g;
    }
  }
  return loss;
}

namespace {

double classifier_accuracy(const ClassifierParams& p, const std::vector<Vector>& xs,
                           const std::vector<Label>& ys) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) ok += predict_embedding(p, xs[i]).label == ys[i];
  return xs.empty() ? 0.0 : static_cast<double>(ok) / static_cast<double>(xs.size());
}

}  // namespace

std::pair<ClassifierParams, TrainTrace> train_classifier(const Dataset& train,
                                                         const Dataset& val,
                                                         const TrainConfig& cfg,
                                                         const Embedder& embedder,
                                                         const TextSettings& text) {
  cfg.validate();
  if (train.kind != DatasetKind::kTweet || (!val.empty() && val.kind != DatasetKind::kTweet)) {
    throw Error(ErrorCode::kKindMismatch, "the classifier trains on tweet datasets");
  }
  const std::vector<Label> ys = train.labels();
  check_labels(ys, "training");
  const StopwordSet stop = text.stopword_set();
  auto embed_all = [&](const Dataset& d) {
    std::vector<Vector> xs;
    xs.reserve(d.size());
    for (const auto& t : d.tweets) xs.push_back(embedder.embed(preprocess(t.text, stop)));
    return xs;
  };
  const std::vector<Vector> xs = embed_all(train);
  const std::vector<Vector> vxs = val.empty() ? xs : embed_all(val);
  const std::vector<Label> vys = val.empty() ? ys : val.labels();

  std::mt19937_64 rng(cfg.seed);
  ClassifierParams p;
  p.W = Matrix::Zero(kNumClasses, static_cast<Eigen::Index>(embedder.dim()));
  xavier(p.W, rng);
  p.embedder = embedder.spec();
  p.text = text;

  OptimizerState opt(cfg);
  ClassifierParams grad;
  TrainTrace trace;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = shuffled(xs.size(), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<Vector> bx;
      std::vector<Label> by;
      for (std::size_t i = start; i < end; ++i) {
        bx.push_back(xs[order[i]]);
        by.push_back(ys[order[i]]);
      }
      loss_sum += classifier_loss(p, bx, by, &grad);
      opt.step(param_refs(p), param_refs(grad));
      ++step;
      ++batches;
    }
    trace.records.push_back(TraceRecord{step, loss_sum / static_cast<double>(batches),
                                        classifier_accuracy(p, vxs, vys)});
  }
  return {std::move(p), std::move(trace)};
}

// ---------------------------------------------------------------------------
// Aspect-level model

Vector Encoder::encode(const Vector& e) const {
  check_dim(e, static_cast<std::size_t>(W1.cols()), "embedding");
  return W2 * (W1 * e).array().tanh().matrix();
}

const BackdoorHead& AbsaModel::backdoor() const {
  if (const auto* h = std::get_if<BackdoorHead>(&review_head)) return *h;
  throw Error(ErrorCode::kModeMismatch, "model has no backdoor head");
}

const LinearHead& AbsaModel::plain_review_head() const {
  if (const auto* h = std::get_if<LinearHead>(&review_head)) return *h;
  throw Error(ErrorCode::kModeMismatch, "model has no plain review head");
}

void AbsaModel::validate() const {
  const bool has_backdoor = std::holds_alternative<BackdoorHead>(review_head);
  if (ct != has_backdoor || ct != baselines.has_value()) {
    throw Error(ErrorCode::kCorruptModel,
                "causal flag, review head and baselines are inconsistent");
  }
  const auto d = static_cast<Eigen::Index>(d_rep());
  auto shape = [](const Matrix& m, Eigen::Index r, Eigen::Index c, std::string_view what) {
    if (m.rows() != r || m.cols() != c) {
      throw Error(ErrorCode::kDimensionMismatch, std::string(what) + " has the wrong shape");
    }
  };
  shape(encoder.W2, d, encoder.W1.rows(), "encoder.W2");
  shape(aspect_head.W, kNumClasses, d, "aspect head");
  shape(knowledge_head.W, kNumClasses, 2 * d, "knowledge head");
  if (ct) {
    backdoor().validate();
    if (static_cast<Eigen::Index>(backdoor().d_rep()) != d) {
      throw Error(ErrorCode::kDimensionMismatch, "backdoor head has the wrong width");
    }
  } else {
    shape(plain_review_head().W, kNumClasses, d, "review head");
  }
}

AbsaModel zero_absa_model(std::size_t embed_dim, std::size_t hidden, std::size_t d_rep,
                          std::size_t strata, bool ct) {
  const auto d = static_cast<Eigen::Index>(d_rep);
  AbsaModel m;
  m.ct = ct;
  m.encoder.W1 = Matrix::Zero(static_cast<Eigen::Index>(hidden),
                              static_cast<Eigen::Index>(embed_dim));
  m.encoder.W2 = Matrix::Zero(d, static_cast<Eigen::Index>(hidden));
  m.aspect_head.W = Matrix::Zero(kNumClasses, d);
  m.knowledge_head.W = Matrix::Zero(kNumClasses, 2 * d);
  if (ct) {
    m.review_head = BackdoorHead::zeros(d_rep, strata, 0.1);
    m.baselines = CounterfactualBaseline{};
  } else {
    m.review_head = LinearHead{Matrix::Zero(kNumClasses, d), Logits::Zero()};
  }
  return m;
}

namespace {

AbsaModel init_absa_from(std::size_t embed_dim, const TrainConfig& cfg, bool ct,
                         std::mt19937_64& rng) {
  AbsaModel m = zero_absa_model(embed_dim, cfg.hidden, cfg.d_rep, cfg.strata_K, ct);
  m.knowledge_window = cfg.knowledge_window;
  xavier(m.encoder.W1, rng);
  xavier(m.encoder.W2, rng);
  xavier(m.aspect_head.W, rng);
  xavier(m.knowledge_head.W, rng);
  if (ct) {
    auto& h = std::get<BackdoorHead>(m.review_head);
    h.tau = cfg.tau;
    h.epsilon = cfg.epsilon;
    xavier(h.weights, rng);
  } else {
    xavier(std::get<LinearHead>(m.review_head).W, rng);
  }
  return m;
}

}  // namespace

AbsaModel init_absa_model(std::size_t embed_dim, const TrainConfig& cfg, bool ct) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  return init_absa_from(embed_dim, cfg, ct, rng);
}

TokenSeq aspect_context(const TokenSeq& review, const TokenSeq& aspect,
                        std::size_t knowledge_window, const Embedder& embedder,
                        const std::optional<Span>& span) {
  if (review.empty()) return review;
  std::optional<std::pair<std::size_t, std::size_t>> mention;
  if (span && span->start < span->end) {
    for (std::size_t t = 0; t < review.size(); ++t) {
      if (review.spans[t].start < span->end && review.spans[t].end > span->start) {
        if (!mention) mention = std::make_pair(t, t + 1);
        mention->second = t + 1;
      }
    }
  }
  if (!mention) {
    if (aspect.empty()) return review;
    const AlignmentResult a = align_aspect(review, aspect, kDefaultAlignNgram, embedder);
    mention = std::make_pair(a.token_begin, a.token_begin + a.token_length);
  }
  const std::size_t begin = mention->first > knowledge_window ? mention->first - knowledge_window : 0;
  const std::size_t end = std::min(review.size(), mention->second + knowledge_window);
  return review.slice(begin, end);
}

AbsaInputs make_inputs(const TokenSeq& review, const TokenSeq& aspect,
                       std::size_t knowledge_window, const Embedder& embedder,
                       const std::optional<Span>& span) {
  AbsaInputs in;
  in.review = embedder.embed(review);
  in.aspect = embedder.embed(aspect);
  in.context = embedder.embed(aspect_context(review, aspect, knowledge_window, embedder, span));
  std::vector<std::string> joined = aspect.tokens;
  joined.insert(joined.end(), review.tokens.begin(), review.tokens.end());
  in.concat = embedder.embed_tokens(joined);
  return in;
}

AbsaInputs make_inputs(const AbsaModel& m, const AbsaInstance& inst, const Embedder& embedder) {
  const StopwordSet stop = m.text.stopword_set();
  return make_inputs(preprocess(inst.text, stop), preprocess(inst.aspect, stop),
                     m.knowledge_window, embedder, inst.span);
}

Logits fuse(const BranchLogits& l) {
  return l.zeta_k + l.zeta_a.array().tanh().matrix() + l.zeta_r.array().tanh().matrix();
}

BranchLogits forward_inputs(const AbsaModel& m, const AbsaInputs& in) {
  BranchLogits out{Logits::Zero(), Logits::Zero(), Logits::Zero()};
  if (!m.ct) {
    out.zeta_r = m.plain_review_head().apply(m.encoder.encode(in.concat));
    return out;
  }
  const Vector r = m.encoder.encode(in.review);
  const Vector a = m.encoder.encode(in.aspect);
  const Vector c = m.encoder.encode(in.context);
  Vector ca(c.size() + a.size());
  ca << c, a;
  out.zeta_a = m.aspect_head.apply(a);
  out.zeta_k = m.knowledge_head.apply(ca);
  out.zeta_r = backdoor_logits(m.backdoor(), r);
  return out;
}

BranchLogits forward_branches(const AbsaModel& m, const TokenSeq& review, const TokenSeq& aspect,
                              const Embedder& embedder) {
  return forward_inputs(m, make_inputs(review, aspect, m.knowledge_window, embedder));
}

namespace {

AbsaModel zero_like(const AbsaModel& m) {
  AbsaModel g = zero_absa_model(m.embed_dim(), static_cast<std::size_t>(m.encoder.W1.rows()),
                                m.d_rep(), m.ct ? m.backdoor().strata : 1, m.ct);
  g.knowledge_window = m.knowledge_window;
  return g;
}

// Gradient of the backdoor logits w.r.t. the head weights (accumulated into
// gw) and the representation (returned), for upstream gradient g.
Vector backdoor_backward(const BackdoorHead& h, const Vector& r, const Logits& g, Matrix& gw) {
  const auto len = static_cast<Eigen::Index>(h.chunk());
  const double scale = h.tau / static_cast<double>(h.strata);
  Vector dr = Vector::Zero(r.size());
  for (std::size_t k = 0; k < h.strata; ++k) {
    const Eigen::Index off = static_cast<Eigen::Index>(k) * len;
    const auto rk = r.segment(off, len);
    const auto mk = h.mu.segment(off, len);
    const double rn = rk.norm();
    const double mn = mk.norm();
    Vector rhat = Vector::Zero(len);
    if (rn >= BackdoorHead::kNormFloor) rhat = rk / rn;
    Vector diff = rhat;
    if (mn >= BackdoorHead::kNormFloor) diff -= mk / mn;
    Vector acc = Vector::Zero(len);
    for (int c = 0; c < kNumClasses; ++c) {
      const Vector w = h.weights.row(c).segment(off, len).transpose();
      const double wn = w.norm();
      const double s = wn + h.epsilon;
      Vector dw = diff / s;
      if (wn > 0) dw -= (w.dot(diff) / (wn * s * s)) * w;
      gw.row(c).segment(off, len) += (scale * g[c]) * dw.transpose();
      acc += g[c] * (w / s);
    }
    if (rn >= BackdoorHead::kNormFloor) {
      dr.segment(off, len) = scale * (acc - acc.dot(rhat) * rhat) / rn;
    }
  }
  return dr;
}

AbsaLossParts absa_loss_impl(const AbsaModel& m, const std::vector<AbsaInputs>& inputs,
                             const std::vector<Label>& ys, const TrainConfig& cfg,
                             AbsaModel* grad, Vector* review_mean) {
  if (inputs.size() != ys.size()) {
    throw Error(ErrorCode::kInvalidArgument, "inputs/labels size mismatch");
  }
  if (inputs.empty()) throw Error(ErrorCode::kInvalidArgument, "empty batch");
  const auto n = static_cast<Eigen::Index>(inputs.size());
  const double inv = 1.0 / static_cast<double>(n);
  const auto d = static_cast<Eigen::Index>(m.embed_dim());
  const auto dr = static_cast<Eigen::Index>(m.d_rep());

  // Rows: ct -> [reviews; aspects; contexts], otherwise concatenations.
  const Eigen::Index groups = m.ct ? 3 : 1;
  Matrix x(groups * n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const AbsaInputs& in = inputs[static_cast<std::size_t>(i)];
    if (m.ct) {
      check_dim(in.review, m.embed_dim(), "review embedding");
      check_dim(in.aspect, m.embed_dim(), "aspect embedding");
      check_dim(in.context, m.embed_dim(), "context embedding");
      x.row(i) = in.review.transpose();
      x.row(n + i) = in.aspect.transpose();
      x.row(2 * n + i) = in.context.transpose();
    } else {
      check_dim(in.concat, m.embed_dim(), "concat embedding");
      x.row(i) = in.concat.transpose();
    }
  }
  const Matrix hid = (x * m.encoder.W1.transpose()).array().tanh().matrix();
  const Matrix rep = hid * m.encoder.W2.transpose();
  Matrix drep = Matrix::Zero(rep.rows(), rep.cols());

  if (grad) *grad = zero_like(m);
  if (review_mean) *review_mean = rep.topRows(n).colwise().mean().transpose();

  AbsaLossParts out;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Label y = ys[static_cast<std::size_t>(i)];
    if (!m.ct) {
      const LinearHead& head = m.plain_review_head();
      const Vector r = rep.row(i).transpose();
      const Logits g = ce_grad(head.apply(r), y, inv, &out.joint);
      if (grad) {
        auto& gh = std::get<LinearHead>(grad->review_head);
        gh.W.noalias() += g * r.transpose();
        gh.b += g;
        drep.row(i) = (head.W.transpose() * g).transpose();
      }
      continue;
    }
    const BackdoorHead& bd = m.backdoor();
    const CounterfactualBaseline& base = *m.baselines;
    const Vector r = rep.row(i).transpose();
    const Vector a = rep.row(n + i).transpose();
    const Vector c = rep.row(2 * n + i).transpose();
    Vector ca(2 * dr);
    ca << c, a;
    const BranchLogits l{m.aspect_head.apply(a), backdoor_logits(bd, r),
                         m.knowledge_head.apply(ca)};
    const Logits psi = fuse(l);
    const auto& w = cfg.branch_loss_weights;
    const Logits g_psi = ce_grad(psi, y, w[0] * inv, &out.joint);
    const Logits g_a = g_psi.cwiseProduct(dtanh(l.zeta_a)) + ce_grad(l.zeta_a, y, w[1] * inv, &out.joint);
    const Logits g_r = g_psi.cwiseProduct(dtanh(l.zeta_r)) + ce_grad(l.zeta_r, y, w[2] * inv, &out.joint);
    const Logits g_k = g_psi + ce_grad(l.zeta_k, y, w[3] * inv, &out.joint);

    // Consistency of the single-branch counterfactuals with the factual
    // prediction; only the baselines see this gradient.
    const Logits q = softmax(psi);
    const double cw = cfg.counterfactual_weight * inv;
    const Logits no_review = fuse(BranchLogits{l.zeta_a, base.c_r, base.c_k});
    const Logits no_aspect = fuse(BranchLogits{base.c_a, l.zeta_r, base.c_k});
    const Logits g1 = soft_ce_grad(no_review, q, cw, &out.consistency);
    const Logits g2 = soft_ce_grad(no_aspect, q, cw, &out.consistency);

    if (!grad) continue;
    grad->aspect_head.W.noalias() += g_a * a.transpose();
    grad->aspect_head.b += g_a;
    grad->knowledge_head.W.noalias() += g_k * ca.transpose();
    grad->knowledge_head.b += g_k;
    const Vector dca = m.knowledge_head.W.transpose() * g_k;
    drep.row(n + i) = (m.aspect_head.W.transpose() * g_a + dca.tail(dr)).transpose();
    drep.row(2 * n + i) = dca.head(dr).transpose();
    drep.row(i) =
        backdoor_backward(bd, r, g_r, std::get<BackdoorHead>(grad->review_head).weights)
            .transpose();
    grad->baselines->c_k += g1 + g2;
    grad->baselines->c_r += g1.cwiseProduct(dtanh(base.c_r));
    grad->baselines->c_a += g2.cwiseProduct(dtanh(base.c_a));
  }

  if (grad) {
    grad->encoder.W2.noalias() = drep.transpose() * hid;
    const Matrix dhid =
        ((drep * m.encoder.W2).array() * (1.0 - hid.array().square())).matrix();
    grad->encoder.W1.noalias() = dhid.transpose() * x;
  }
  return out;
}

}  // namespace

AbsaLossParts absa_loss(const AbsaModel& m, const std::vector<AbsaInputs>& inputs,
                        const std::vector<Label>& ys, const TrainConfig& cfg, AbsaModel* grad) {
  return absa_loss_impl(m, inputs, ys, cfg, grad, nullptr);
}

double absa_accuracy(const AbsaModel& m, const std::vector<AbsaInputs>& inputs,
                     const std::vector<Label>& ys) {
  if (inputs.empty()) return 0.0;
  const InferMode mode = m.ct ? InferMode::kTie : InferMode::kStandard;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    ok += infer_from_branches(m, forward_inputs(m, inputs[i]), mode).label == ys[i];
  }
  return static_cast<double>(ok) / static_cast<double>(inputs.size());
}

std::pair<AbsaModel, TrainTrace> train_absa(const Dataset& train, const Dataset& val,
                                            const TrainConfig& cfg, bool ct,
                                            const Embedder& embedder, const TextSettings& text) {
  cfg.validate();
  if (train.kind != DatasetKind::kAbsa || (!val.empty() && val.kind != DatasetKind::kAbsa)) {
    throw Error(ErrorCode::kKindMismatch, "aspect-level training needs absa datasets");
  }
  const std::vector<Label> ys = train.labels();
  check_labels(ys, "training");

  // One stream: initialization, then the per-epoch shuffles.
  std::mt19937_64 rng(cfg.seed);
  AbsaModel m = init_absa_from(embedder.dim(), cfg, ct, rng);
  m.embedder = embedder.spec();
  m.text = text;

  const StopwordSet stop = text.stopword_set();
  auto inputs_of = [&](const Dataset& d) {
    std::vector<AbsaInputs> out;
    out.reserve(d.size());
    for (std::size_t i = 0; i < d.absa.size(); ++i) {
      const AbsaInstance& inst = d.absa[i];
      const TokenSeq review = preprocess(inst.text, stop);
      if (review.empty()) {
        throw Error(ErrorCode::kEmptyText, "instance '" + inst.id + "' has an empty review",
                    i + 1, "text");
      }
      out.push_back(make_inputs(review, preprocess(inst.aspect, stop), m.knowledge_window,
                                embedder, inst.span));
    }
    return out;
  };
  const std::vector<AbsaInputs> xs = inputs_of(train);
  const std::vector<AbsaInputs> vxs = val.empty() ? xs : inputs_of(val);
  const std::vector<Label> vys = val.empty() ? ys : val.labels();

  OptimizerState opt(cfg);
  AbsaModel grad;
  Vector batch_mean;
  TrainTrace trace;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = shuffled(xs.size(), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<AbsaInputs> bx;
      std::vector<Label> by;
      for (std::size_t i = start; i < end; ++i) {
        bx.push_back(xs[order[i]]);
        by.push_back(ys[order[i]]);
      }
      loss_sum += absa_loss_impl(m, bx, by, cfg, &grad, &batch_mean).joint;
      opt.step(param_refs(m), param_refs(grad));
      if (ct) {
        update_confounder_mean(std::get<BackdoorHead>(m.review_head), batch_mean,
                               cfg.momentum_m);
      }
      ++step;
      ++batches;
    }
    trace.records.push_back(
        TraceRecord{step, loss_sum / static_cast<double>(batches), absa_accuracy(m, vxs, vys)});
  }
  return {std::move(m), std::move(trace)};
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

constexpr char kMagic[4] = {'C', 'D', 'G', 'M'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(std::string_view b, std::size_t off) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[off + i])) << (8 * i);
  }
  return v;
}

void put_f64(std::string& out, double x) {
  const auto bits = std::bit_cast<std::uint64_t>(x);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

double get_f64(std::string_view b, std::size_t off) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) {
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[off + i])) << (8 * i);
  }
  return std::bit_cast<double>(bits);
}

std::uint32_t crc_of(std::string_view b) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  constexpr std::size_t kChunk = 1u << 30;
  for (std::size_t off = 0; off < b.size(); off += kChunk) {
    const std::size_t len = std::min(kChunk, b.size() - off);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(b.data() + off), static_cast<uInt>(len));
  }
  return static_cast<std::uint32_t>(crc);
}

struct NamedArray {
  std::string name;
  double* data;
  Eigen::Index rows, cols;
};

template <typename M>
NamedArray named(std::string name, M& m) {
  return NamedArray{std::move(name), m.data(), m.rows(), m.cols()};
}

// The documented array order.
std::vector<NamedArray> arrays_of(ClassifierParams& p) {
  return {named("W", p.W), named("b", p.b)};
}

std::vector<NamedArray> arrays_of(AbsaModel& m) {
  std::vector<NamedArray> out = {named("encoder.W1", m.encoder.W1),
                                 named("encoder.W2", m.encoder.W2),
                                 named("aspect.W", m.aspect_head.W),
                                 named("aspect.b", m.aspect_head.b),
                                 named("knowledge.W", m.knowledge_head.W),
                                 named("knowledge.b", m.knowledge_head.b)};
  if (auto* h = std::get_if<LinearHead>(&m.review_head)) {
    out.push_back(named("review.W", h->W));
    out.push_back(named("review.b", h->b));
  } else {
    auto& bd = std::get<BackdoorHead>(m.review_head);
    out.push_back(named("backdoor.W", bd.weights));
    out.push_back(named("backdoor.mu", bd.mu));
  }
  if (m.baselines) {
    out.push_back(named("baseline.c_a", m.baselines->c_a));
    out.push_back(named("baseline.c_r", m.baselines->c_r));
    out.push_back(named("baseline.c_k", m.baselines->c_k));
  }
  return out;
}

json embedder_json(const EmbedderSpec& e) {
  return {{"kind", embedder_kind_name(e.kind)},
          {"dim", e.dim},
          {"hash_buckets", e.hash_buckets},
          {"vectors_path", e.vectors_path}};
}

EmbedderSpec embedder_from_json(const json& j) {
  EmbedderSpec e;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == embedder_kind_name(EmbedderKind::kHashedBag)) {
    e.kind = EmbedderKind::kHashedBag;
  } else if (kind == embedder_kind_name(EmbedderKind::kFileBacked)) {
    e.kind = EmbedderKind::kFileBacked;
  } else {
    throw Error(ErrorCode::kCorruptModel, "unknown embedder kind '" + kind + "'");
  }
  e.dim = j.at("dim").get<std::size_t>();
  e.hash_buckets = j.at("hash_buckets").get<std::uint64_t>();
  e.vectors_path = j.at("vectors_path").get<std::string>();
  return e;
}

std::string pack(const json& meta, const std::vector<NamedArray>& arrays) {
  json meta_full = meta;
  meta_full["arrays"] = json::array();
  for (const auto& a : arrays) {
    meta_full["arrays"].push_back({{"name", a.name}, {"rows", a.rows}, {"cols", a.cols}});
  }
  const std::string m = meta_full.dump();
  std::string out(kMagic, 4);
  put_u32(out, kModelFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(m.size()));
  out += m;
  for (const auto& a : arrays) {
    for (Eigen::Index i = 0; i < a.rows * a.cols; ++i) put_f64(out, a.data[i]);
  }
  put_u32(out, crc_of(std::string_view(out).substr(8)));
  return out;
}

}  // namespace

std::string serialize_model(const AnyModel& any) {
  if (const auto* cp = std::get_if<ClassifierParams>(&any)) {
    ClassifierParams p = *cp;
    json meta = {{"kind", "classifier"},
                 {"dims", {{"classes", kNumClasses}, {"embed", p.W.cols()}}},
                 {"embedder", embedder_json(p.embedder)},
                 {"stopwords", p.text.stopwords}};
    return pack(meta, arrays_of(p));
  }
  AbsaModel m = std::get<AbsaModel>(any);
  m.validate();
  json meta = {{"kind", "absa"},
               {"ct", m.ct},
               {"dims",
                {{"classes", kNumClasses},
                 {"embed", m.embed_dim()},
                 {"hidden", m.encoder.W1.rows()},
                 {"d_rep", m.d_rep()}}},
               {"knowledge_window", m.knowledge_window},
               {"embedder", embedder_json(m.embedder)},
               {"stopwords", m.text.stopwords}};
  if (m.ct) {
    const BackdoorHead& h = m.backdoor();
    meta["backdoor"] = {{"tau", h.tau}, {"strata", h.strata}, {"epsilon", h.epsilon}};
  }
  return pack(meta, arrays_of(m));
}

AnyModel deserialize_model(std::string_view b) {
  if (b.size() < 4) {
    if (std::string_view(kMagic, 4).substr(0, b.size()) == b) {
      throw Error(ErrorCode::kTruncatedFile, "model file is truncated");
    }
    throw Error(ErrorCode::kBadMagic, "not a model file");
  }
  if (b.substr(0, 4) != std::string_view(kMagic, 4)) {
    throw Error(ErrorCode::kBadMagic, "not a model file");
  }
  if (b.size() < 8) throw Error(ErrorCode::kTruncatedFile, "model file is truncated");
  const std::uint32_t version = get_u32(b, 4);
  if (version != kModelFormatVersion) {
    throw Error(ErrorCode::kUnsupportedVersion,
                "model format version " + std::to_string(version) + " is not supported (expected " +
                    std::to_string(kModelFormatVersion) + ")");
  }
  if (b.size() < 12) throw Error(ErrorCode::kTruncatedFile, "model file is truncated");
  const std::uint32_t meta_len = get_u32(b, 8);
  if (b.size() < 12ull + meta_len + 4ull) {
    throw Error(ErrorCode::kTruncatedFile, "model file is truncated");
  }
  auto crc_ok = [&] {
    return get_u32(b, b.size() - 4) == crc_of(b.substr(8, b.size() - 12));
  };
  auto corrupt = [&](const std::string& what) -> Error {
    if (!crc_ok()) return Error(ErrorCode::kChecksumMismatch, "model file checksum mismatch");
    return Error(ErrorCode::kCorruptModel, "corrupt model metadata: " + what);
  };

  json meta;
  std::size_t total = 0;
  try {
    meta = json::parse(b.substr(12, meta_len));
    for (const auto& a : meta.at("arrays")) {
      total += a.at("rows").get<std::size_t>() * a.at("cols").get<std::size_t>();
    }
  } catch (const json::exception& e) {
    throw corrupt(e.what());
  }
  const std::size_t expected = 12ull + meta_len + 8ull * total + 4ull;
  if (b.size() < expected) throw Error(ErrorCode::kTruncatedFile, "model file is truncated");
  if (b.size() > expected) throw corrupt("trailing bytes after the arrays");
  if (!crc_ok()) throw Error(ErrorCode::kChecksumMismatch, "model file checksum mismatch");

  auto fill = [&](std::vector<NamedArray> arrays) {
    const json& listed = meta.at("arrays");
    if (listed.size() != arrays.size()) {
      throw Error(ErrorCode::kCorruptModel, "array list does not match the model kind");
    }
    std::size_t off = 12 + meta_len;
    for (std::size_t k = 0; k < arrays.size(); ++k) {
      const NamedArray& a = arrays[k];
      if (listed[k].at("name").get<std::string>() != a.name ||
          listed[k].at("rows").get<Eigen::Index>() != a.rows ||
          listed[k].at("cols").get<Eigen::Index>() != a.cols) {
        throw Error(ErrorCode::kCorruptModel, "array '" + a.name + "' has an unexpected shape");
      }
      for (Eigen::Index i = 0; i < a.rows * a.cols; ++i, off += 8) a.data[i] = get_f64(b, off);
    }
  };

  try {
    const std::string kind = meta.at("kind").get<std::string>();
    TextSettings text{meta.at("stopwords").get<std::vector<std::string>>()};
    const json& dims = meta.at("dims");
    if (dims.at("classes").get<int>() != kNumClasses) {
      throw Error(ErrorCode::kCorruptModel, "unexpected class count");
    }
    if (kind == "classifier") {
      ClassifierParams p;
      p.W = Matrix::Zero(kNumClasses, dims.at("embed").get<Eigen::Index>());
      p.embedder = embedder_from_json(meta.at("embedder"));
      p.text = std::move(text);
      fill(arrays_of(p));
      return p;
    }
    if (kind != "absa") throw Error(ErrorCode::kCorruptModel, "unknown model kind '" + kind + "'");
    const bool ct = meta.at("ct").get<bool>();
    std::size_t strata = 1;
    if (ct) strata = meta.at("backdoor").at("strata").get<std::size_t>();
    const auto d_rep = dims.at("d_rep").get<std::size_t>();
    if (strata == 0 || d_rep == 0 || d_rep % strata != 0) {
      throw Error(ErrorCode::kCorruptModel, "invalid strata count");
    }
    AbsaModel m = zero_absa_model(dims.at("embed").get<std::size_t>(),
                                  dims.at("hidden").get<std::size_t>(), d_rep, strata, ct);
    m.knowledge_window = meta.at("knowledge_window").get<std::size_t>();
    m.embedder = embedder_from_json(meta.at("embedder"));
    m.text = std::move(text);
    if (ct) {
      auto& h = std::get<BackdoorHead>(m.review_head);
      h.tau = meta.at("backdoor").at("tau").get<double>();
      h.epsilon = meta.at("backdoor").at("epsilon").get<double>();
    }
    fill(arrays_of(m));
    try {
      m.validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::kCorruptModel, e.what());
    }
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptModel, std::string("corrupt model metadata: ") + e.what());
  }
}

void save_model(const AnyModel& m, const std::filesystem::path& path) {
  const std::string bytes = serialize_model(m);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write model file " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "failed writing model file " + path.string());
}

AnyModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFileNotFound, "cannot open model file " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace cdg
