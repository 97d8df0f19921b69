#include "grapeqa/canp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

namespace grapeqa {

namespace mp = boost::multiprecision;

namespace {

// Exact value num * 2^exp2 of a finite double, as a rational.
mp::cpp_rational exact(double x) {
  int e = 0;
  const double m = std::frexp(x, &e);
  const auto mant = static_cast<long long>(std::ldexp(m, 53));  // exact: |m| < 1
  mp::cpp_int num = mant;
  mp::cpp_int den = 1;
  const int shift = e - 53;
  if (shift >= 0) num <<= shift;
  else den <<= -shift;
  return mp::cpp_rational(num, den);
}

// Nearest double to a rational, ties to even.
double to_nearest_double(const mp::cpp_rational& q) {
  if (q == 0) return 0.0;
  if (q < 0) return -to_nearest_double(-q);
  mp::cpp_int num = mp::numerator(q);
  mp::cpp_int den = mp::denominator(q);
  // Choose k so that floor(num * 2^k / den) has exactly 54 bits (53 + 1 guard).
  const long long nbits = static_cast<long long>(mp::msb(num)) - static_cast<long long>(mp::msb(den));
  long long k = 53 - nbits;
  auto scaled_quotient = [&](long long kk, mp::cpp_int& rem) {
    mp::cpp_int n = num;
    mp::cpp_int d = den;
    if (kk >= 0) n <<= static_cast<unsigned>(kk);
    else d <<= static_cast<unsigned>(-kk);
    mp::cpp_int qv;
    mp::divide_qr(n, d, qv, rem);
    return qv;
  };
  mp::cpp_int rem;
  mp::cpp_int qv = scaled_quotient(k, rem);
  if (mp::msb(qv) < 53) {
    ++k;
    qv = scaled_quotient(k, rem);
  }
  // qv has 54 bits; drop the guard bit with round-half-even using the remainder as sticky.
  const bool guard = mp::bit_test(qv, 0);
  const bool sticky = rem != 0;
  mp::cpp_int mant = qv >> 1;
  if (guard && (sticky || mp::bit_test(mant, 0))) ++mant;
  return std::ldexp(mant.convert_to<double>(), static_cast<int>(1 - k));
}

}  // namespace

PsiMatrix score_extra_nodes(const RelevanceScorer& scorer, const WorkingGraph& wg) {
  const WgNode* z = wg.context_node();
  if (z == nullptr) throw std::logic_error("CANP requires a context node");
  PsiMatrix psi;
  psi.extras = wg.ids_of(NodeKind::ExtraNode);
  psi.answers = wg.ids_of(NodeKind::AnswerEntity);
  if (psi.extras.empty() || psi.answers.size() < 2) {
    throw std::logic_error("CANP scoring needs >= 1 extra node and >= 2 answer entities");
  }
  psi.values = Tensor(psi.extras.size(), psi.answers.size());
  for (std::size_t i = 0; i < psi.extras.size(); ++i) {
    const auto& s = wg.find(psi.extras[i])->label;
    for (std::size_t j = 0; j < psi.answers.size(); ++j) {
      const auto& a = wg.find(psi.answers[j])->label;
      psi.values(i, j) = scorer.score_text(z->label + " " + a + " " + s).score;
    }
  }
  return psi;
}

ClusterAssignment assign_clusters(const Tensor& psi) {
  if (psi.rows == 0 || psi.cols == 0) throw std::invalid_argument("psi matrix is empty");
  ClusterAssignment out;
  out.assignment.resize(psi.rows);
  std::vector<mp::cpp_rational> sums(psi.cols);
  std::vector<std::size_t> counts(psi.cols, 0);
  for (std::size_t i = 0; i < psi.rows; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < psi.cols; ++j) {
      if (psi(i, j) > psi(i, best)) best = j;
    }
    out.assignment[i] = best;
    sums[best] += exact(psi(i, best));
    ++counts[best];
  }
  std::optional<std::size_t> argmin;
  mp::cpp_rational min_mean;
  for (std::size_t j = 0; j < psi.cols; ++j) {
    if (counts[j] == 0) continue;
    const mp::cpp_rational mean = sums[j] / static_cast<long long>(counts[j]);
    out.cluster_means[j] = to_nearest_double(mean);
    if (!argmin || mean < min_mean) {
      argmin = j;
      min_mean = mean;
    }
  }
  out.pruned_cluster = *argmin;
  return out;
}

CanpOutcome plan_canp(const WorkingGraph& wg, const RelevanceScorer& scorer, const CanpOptions& options) {
  CanpOutcome out;
  if (wg.count(NodeKind::AnswerEntity) <= 1 || wg.count(NodeKind::ExtraNode) == 0) return out;
  out.psi = score_extra_nodes(scorer, wg);
  out.clusters = assign_clusters(out.psi->values);
  std::vector<LocalId> removed;
  for (std::size_t i = 0; i < out.psi->extras.size(); ++i) {
    if (out.clusters->assignment[i] == out.clusters->pruned_cluster) removed.push_back(out.psi->extras[i]);
  }
  if (out.psi->extras.size() - removed.size() < options.min_survivors) return out;
  out.applied = true;
  out.removed = std::move(removed);
  return out;
}

WorkingGraph canp_prune(WorkingGraph wg, const RelevanceScorer& scorer, const CanpOptions& options,
                        CanpOutcome* outcome) {
  auto plan = plan_canp(wg, scorer, options);
  if (plan.applied) wg.remove_nodes(plan.removed);
  if (outcome != nullptr) *outcome = std::move(plan);
  return wg;
}

}  // namespace grapeqa
