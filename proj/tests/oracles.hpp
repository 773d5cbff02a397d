#pragma once

// Brute-force reference implementations, written from the metric
// definitions without sharing code with the library.

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

namespace eotk::oracle {

struct Counts {
  double tp = 0, fp = 0, fn = 0, tn = 0;
};

inline double safe_div(double a, double b) { return b == 0.0 ? 0.0 : a / b; }

inline Counts count_class(const std::vector<std::vector<std::uint8_t>>& t,
                          const std::vector<std::vector<std::uint8_t>>& p, std::size_t c) {
  Counts out;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const bool truth = t[i][c] == 1;
    const bool pred = p[i][c] == 1;
    if (truth && pred) out.tp += 1;
    if (!truth && pred) out.fp += 1;
    if (truth && !pred) out.fn += 1;
    if (!truth && !pred) out.tn += 1;
  }
  return out;
}

struct Prf {
  double precision = 0, recall = 0, f1 = 0;
};

inline Prf prf(const Counts& c) {
  Prf out;
  out.precision = safe_div(c.tp, c.tp + c.fp);
  out.recall = safe_div(c.tp, c.tp + c.fn);
  out.f1 = safe_div(2.0 * c.tp, 2.0 * c.tp + c.fp + c.fn);
  return out;
}

struct Report {
  std::vector<Prf> per_class;
  Prf micro, macro;
  double accuracy = 0;
};

/// `exact_rows` selects subset accuracy; otherwise argmax agreement.
inline Report evaluate(const std::vector<std::vector<std::uint8_t>>& t, const std::vector<std::vector<std::uint8_t>>& p,
                       bool exact_rows) {
  Report r;
  const std::size_t k = t.empty() ? 0 : t[0].size();
  Counts pooled;
  for (std::size_t c = 0; c < k; ++c) {
    const Counts cc = count_class(t, p, c);
    pooled.tp += cc.tp;
    pooled.fp += cc.fp;
    pooled.fn += cc.fn;
    r.per_class.push_back(prf(cc));
    r.macro.precision += r.per_class.back().precision / static_cast<double>(k);
    r.macro.recall += r.per_class.back().recall / static_cast<double>(k);
    r.macro.f1 += r.per_class.back().f1 / static_cast<double>(k);
  }
  r.micro = prf(pooled);
  double hits = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (exact_rows) {
      hits += t[i] == p[i] ? 1 : 0;
    } else {
      std::size_t at = 0, ap = 0;
      for (std::size_t c = 0; c < k; ++c) {
        if (t[i][c] > t[i][at]) at = c;
        if (p[i][c] > p[i][ap]) ap = c;
      }
      hits += at == ap ? 1 : 0;
    }
  }
  r.accuracy = t.empty() ? 0.0 : hits / static_cast<double>(t.size());
  return r;
}

/// NMI from the contingency table, arithmetic-mean normalization.
inline double nmi(const std::vector<int>& a, const std::vector<int>& b) {
  const double n = static_cast<double>(a.size());
  std::map<int, double> ca, cb;
  std::map<std::pair<int, int>, double> joint;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca[a[i]] += 1;
    cb[b[i]] += 1;
    joint[{a[i], b[i]}] += 1;
  }
  if (ca.size() < 2 || cb.size() < 2) return 0.0;
  auto entropy = [n](const std::map<int, double>& counts) {
    double h = 0;
    for (const auto& [_, c] : counts) h -= c / n * std::log(c / n);
    return h;
  };
  double mi = 0;
  for (const auto& [key, c] : joint) mi += c / n * std::log(c * n / (ca[key.first] * cb[key.second]));
  return mi / ((entropy(ca) + entropy(cb)) / 2);
}

}  // namespace eotk::oracle
