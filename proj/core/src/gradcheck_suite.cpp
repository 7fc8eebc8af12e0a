#include "poesup/gradcheck_suite.hpp"

#include <cmath>
#include <stdexcept>

#include "poesup/fusion.hpp"
#include "poesup/grad_check.hpp"
#include "poesup/losses.hpp"
#include "poesup/pipeline.hpp"
#include "poesup/rng.hpp"

namespace poesup {
namespace {

constexpr double kKinkMargin = 1e-3;

Matrix random_matrix(Rng& rng, Index rows, Index cols, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

std::vector<int> random_ints(Rng& rng, std::size_t n, int lo, int hi) {
  std::vector<int> out(n);
  for (int& v : out) v = lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
  return out;
}

std::vector<double> to_vector(const Matrix& m) { return {m.data(), m.data() + m.size()}; }

Matrix from_span(std::span<const double> x, Index rows, Index cols) {
  Matrix m(rows, cols);
  std::copy(x.begin(), x.end(), m.data());
  return m;
}

GradCheckRow check(std::string name, int point, const ScalarFunction& f, const std::vector<double>& x,
                   std::vector<double> analytic, double eps, bool corrupt) {
  if (corrupt && !analytic.empty()) analytic[0] += 1e-2 * (1.0 + std::abs(analytic[0]));
  const GradCheckResult r = grad_check(f, x, analytic, eps);
  return {std::move(name), point, x.size(), r.max_relative_error};
}

GradCheckRow check_cross_entropy(Rng rng, int point, double eps) {
  const Index n = 6;
  const Matrix logits = random_matrix(rng, n, 2, 2.0);
  const std::vector<int> labels = random_ints(rng, n, 0, 1);
  const ScalarFunction f = [&](std::span<const double> x) { return cross_entropy(from_span(x, n, 2), labels).loss; };
  return check("cross_entropy", point, f, to_vector(logits), to_vector(cross_entropy(logits, labels).grad), eps,
               false);
}

GradCheckRow check_supcon(Rng rng, int point, double eps, SupConVariant variant) {
  const Index n = 8;
  const Index d = 6;
  const Matrix raw = random_matrix(rng, n, d);
  const std::vector<int> pictures = random_ints(rng, n, 1, 3);
  auto loss = [&](const Matrix& x) {
    const NormalizedRows nr = normalize_rows(x);
    return std::pair{nr, supcon_loss({nr.unit, pictures, 0.07, variant})};
  };
  const ScalarFunction f = [&](std::span<const double> x) { return loss(from_span(x, n, d)).second.loss; };
  const auto [nr, sc] = loss(raw);
  const std::string name = variant == SupConVariant::Standard ? "supcon_standard" : "supcon_literal";
  return check(name, point, f, to_vector(raw), to_vector(normalize_rows_backward(nr, sc.grad)), eps, false);
}

GradCheckRow check_poe_ce(Rng rng, int point, double eps) {
  const Index n = 6;
  const std::size_t experts = 3;
  const Matrix stacked = random_matrix(rng, n * static_cast<Index>(experts), 2, 2.0);
  const std::vector<int> labels = random_ints(rng, n, 0, 1);
  auto split = [&](const Matrix& s) {
    std::vector<Matrix> out;
    for (std::size_t e = 0; e < experts; ++e) out.push_back(s.middleRows(static_cast<Index>(e) * n, n));
    return out;
  };
  const ScalarFunction f = [&](std::span<const double> x) {
    return cross_entropy(poe_fuse(split(from_span(x, stacked.rows(), 2))).fused, labels).loss;
  };
  const FusedLogits fused = poe_fuse(split(stacked));
  const std::vector<Matrix> d = poe_fuse_backward(fused, cross_entropy(fused.fused, labels).grad);
  std::vector<double> analytic;
  for (const Matrix& m : d) analytic.insert(analytic.end(), m.data(), m.data() + m.size());
  return check("poe_cross_entropy", point, f, to_vector(stacked), analytic, eps, false);
}

bool clear_of_kinks(const MultimodalModel& model, const Batch& batch) {
  const ForwardPass pass = forward(model, batch);
  for (const FfnForward& h : pass.heads) {
    if (h.cache.pre_activation.size() > 0 && h.cache.pre_activation.cwiseAbs().minCoeff() < kKinkMargin) {
      return false;
    }
  }
  return true;
}

GradCheckRow check_end_to_end(Rng rng, int point, double eps, Fusion fusion, bool corrupt) {
  ExperimentConfig cfg;
  cfg.fusion = fusion;
  cfg.use_cl = true;
  cfg.include_joint_expert = fusion == Fusion::PoE;
  cfg.aux_modality_ce = fusion == Fusion::PoE;
  cfg.hidden = 8;
  cfg.projection_dim = 4;
  const std::map<Modality, Index> dims = {
      {Modality::Speech, 5}, {Modality::Acoustic, 3}, {Modality::Text, 6}, {Modality::Image, 4}};
  const Index n = 8;

  MultimodalModel model;
  Batch batch;
  for (int attempt = 0;; ++attempt) {
    if (attempt == 1000) throw std::runtime_error("gradcheck: could not draw a point clear of ReLU kinks");
    cfg.seed = rng.next_u64();
    model = MultimodalModel::create(cfg, dims);
    for (Matrix* p : model.parameters(true)) {
      if (p->rows() == 1) *p = random_matrix(rng, 1, p->cols(), 0.1);
    }
    batch = Batch{};
    for (const auto& [m, dim] : dims) batch.features.emplace(m, random_matrix(rng, n, dim));
    batch.labels = random_ints(rng, n, 0, 1);
    batch.picture_ids = random_ints(rng, n, 1, 3);
    if (clear_of_kinks(model, batch)) break;
  }

  const LossOptions opt{true, 0.7, cfg.tau, SupConVariant::Standard, cfg.aux_modality_ce};
  const std::vector<Matrix*> params = model.parameters(true);
  const std::vector<const Matrix*> const_params(params.begin(), params.end());
  const std::vector<double> x0 = flatten(const_params);
  std::vector<FfnGradients> grads;
  loss_and_gradients(model, batch, opt, &grads);
  const std::vector<const Matrix*> g = gradient_tensors(grads, true);
  const std::vector<double> analytic = flatten(g);

  MultimodalModel probe = model;
  const std::vector<Matrix*> probe_params = probe.parameters(true);
  const ScalarFunction f = [&](std::span<const double> x) {
    unflatten(x, probe_params);
    return loss_and_gradients(probe, batch, opt, nullptr).total;
  };
  const std::string name = fusion == Fusion::PoE ? "end_to_end_poe" : "end_to_end_concat";
  return check(name, point, f, x0, analytic, eps, corrupt);
}

}  // namespace

std::vector<GradCheckRow> run_gradcheck_suite(const GradCheckSuiteOptions& opts) {
  const Rng root(opts.seed);
  std::vector<GradCheckRow> rows;
  auto stream = [&](std::string_view name, int point) {
    return root.split(name).split(static_cast<std::uint64_t>(point));
  };
  for (int p = 0; p < opts.points; ++p) rows.push_back(check_cross_entropy(stream("ce", p), p, opts.eps));
  for (int p = 0; p < opts.points; ++p) {
    rows.push_back(check_supcon(stream("supcon_standard", p), p, opts.eps, SupConVariant::Standard));
  }
  for (int p = 0; p < opts.points; ++p) {
    rows.push_back(check_supcon(stream("supcon_literal", p), p, opts.eps, SupConVariant::PaperLiteral));
  }
  for (int p = 0; p < opts.points; ++p) rows.push_back(check_poe_ce(stream("poe", p), p, opts.eps));
  for (int p = 0; p < opts.points; ++p) {
    rows.push_back(check_end_to_end(stream("e2e_poe", p), p, opts.eps, Fusion::PoE, opts.corrupt_end_to_end));
  }
  for (int p = 0; p < opts.points; ++p) {
    rows.push_back(
        check_end_to_end(stream("e2e_concat", p), p, opts.eps, Fusion::Concat, opts.corrupt_end_to_end));
  }
  return rows;
}

}  // namespace poesup
