// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

#include "scenemark/errors.hpp"
#include "scenemark/metrics.hpp"

namespace scenemark {
namespace {

using Tokens = std::vector<std::string>;
using NgramCounts = std::map<std::string, int>;

constexpr double kZeroCount = 1e-9;
constexpr int kCiderOrder = 4;

void require_refs(std::span<const std::string> refs, const char* who) {
  if (refs.empty()) throw InvalidArgument(std::string(who) + ": no references");
}

std::string join(const Tokens& tokens, std::size_t begin, std::size_t end) {
  std::string key;
  for (std::size_t i = begin; i < end; ++i) {
    if (i > begin) key.push_back(' ');
    key += tokens[i];
  }
  return key;
}

NgramCounts ngrams(const Tokens& tokens, int n) {
  NgramCounts out;
  const auto len = static_cast<std::size_t>(n);
  for (std::size_t i = 0; i + len <= tokens.size(); ++i) ++out[join(tokens, i, i + len)];
  return out;
}

bool contains_run(const Tokens& haystack, const Tokens& needle) {
  if (needle.empty() || needle.size() > haystack.size()) return false;
  return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) !=
         haystack.end();
}

std::size_t closest_length(std::size_t cand, const std::vector<Tokens>& refs) {
  std::size_t best = refs.front().size();
  for (const auto& r : refs) {
    const auto d = [&](std::size_t len) {
      return len > cand ? len - cand : cand - len;
    };
    if (d(r.size()) < d(best) || (d(r.size()) == d(best) && r.size() < best)) {
      best = r.size();
    }
  }
  return best;
}

// Clipped matches and candidate totals of orders 1..n for one sentence.
struct BleuStats {
  std::vector<double> matches;
  std::vector<double> totals;
  double cand_len = 0.0;
  double ref_len = 0.0;
};

BleuStats bleu_stats(const Tokens& cand, const std::vector<Tokens>& refs, int n) {
  BleuStats s;
  s.matches.assign(static_cast<std::size_t>(n), 0.0);
  s.totals.assign(static_cast<std::size_t>(n), 0.0);
  s.cand_len = static_cast<double>(cand.size());
  s.ref_len = static_cast<double>(closest_length(cand.size(), refs));
  for (int k = 1; k <= n; ++k) {
    const auto cand_counts = ngrams(cand, k);
    NgramCounts max_ref;
    for (const auto& r : refs) {
      for (const auto& [gram, c] : ngrams(r, k)) {
        max_ref[gram] = std::max(max_ref[gram], c);
      }
    }
    double m = 0.0, t = 0.0;
    for (const auto& [gram, c] : cand_counts) {
      t += c;
      const auto it = max_ref.find(gram);
      if (it != max_ref.end()) m += std::min(c, it->second);
    }
    s.matches[static_cast<std::size_t>(k - 1)] = m;
    s.totals[static_cast<std::size_t>(k - 1)] = t;
  }
  return s;
}

double bleu_from_stats(const BleuStats& s) {
  if (s.cand_len <= 0.0) return 0.0;
  double log_sum = 0.0;
  int orders = 0;
  for (std::size_t k = 0; k < s.totals.size(); ++k) {
    if (s.totals[k] <= 0.0) continue;
    const double m = s.matches[k] > 0.0 ? s.matches[k] : kZeroCount;
    log_sum += std::log(m / s.totals[k]);
    ++orders;
  }
  if (orders == 0) return 0.0;
  const double bp = s.cand_len > s.ref_len ? 1.0 : std::exp(1.0 - s.ref_len / s.cand_len);
  return std::clamp(bp * std::exp(log_sum / orders), 0.0, 1.0);
}

std::vector<Tokens> tokenize_all(std::span<const std::string> texts) {
  std::vector<Tokens> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(tokenize(t));
  return out;
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double meteor_single(const Tokens& cand, const Tokens& ref) {
  if (cand.empty() || ref.empty()) return 0.0;
  std::vector<int> align(cand.size(), -1);
  std::vector<bool> used(ref.size(), false);
  auto stage = [&](auto&& same) {
    for (std::size_t i = 0; i < cand.size(); ++i) {
      if (align[i] >= 0) continue;
      for (std::size_t j = 0; j < ref.size(); ++j) {
        if (!used[j] && same(cand[i], ref[j])) {
          align[i] = static_cast<int>(j);
          used[j] = true;
          break;
        }
      }
    }
  };
  stage([](const std::string& a, const std::string& b) { return a == b; });
  stage([](const std::string& a, const std::string& b) {
    return light_stem(a) == light_stem(b);
  });

  int m = 0, chunks = 0;
  int prev_ref = -2;
  bool prev_matched = false;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    if (align[i] < 0) {
      prev_matched = false;
      continue;
    }
    ++m;
    if (!prev_matched || align[i] != prev_ref + 1) ++chunks;
    prev_ref = align[i];
    prev_matched = true;
  }
  if (m == 0) return 0.0;
  const double p = static_cast<double>(m) / cand.size();
  const double r = static_cast<double>(m) / ref.size();
  const double fmean = 10.0 * p * r / (r + 9.0 * p);
  const double frag = static_cast<double>(chunks) / m;
  return fmean * (1.0 - 0.5 * frag * frag * frag);
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else if (c < 0x80 && std::ispunct(c)) {
      continue;
    } else {
      cur.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

bool em1(std::string_view pred, std::span<const std::string> refs) {
  require_refs(refs, "em1");
  const auto p = tokenize(pred);
  return std::any_of(refs.begin(), refs.end(),
                     [&](const std::string& r) { return tokenize(r) == p; });
}

bool em_r1(std::string_view pred, std::span<const std::string> refs) {
  if (em1(pred, refs)) return true;
  const auto p = tokenize(pred);
  if (p.empty()) return false;
  return std::any_of(refs.begin(), refs.end(), [&](const std::string& r) {
    const auto t = tokenize(r);
    return contains_run(p, t) || contains_run(t, p);
  });
}

double bleu(std::string_view pred, std::span<const std::string> refs, int n) {
  require_refs(refs, "bleu");
  if (n < 1) throw InvalidArgument("bleu: order must be >= 1");
  return bleu_from_stats(bleu_stats(tokenize(pred), tokenize_all(refs), n));
}

std::vector<double> corpus_bleu(std::span<const CaptionSample> samples, int n) {
  if (n < 1) throw InvalidArgument("corpus_bleu: order must be >= 1");
  BleuStats total;
  total.matches.assign(static_cast<std::size_t>(n), 0.0);
  total.totals.assign(static_cast<std::size_t>(n), 0.0);
  for (const auto& s : samples) {
    require_refs(s.references, "corpus_bleu");
    const auto st = bleu_stats(tokenize(s.prediction), tokenize_all(s.references), n);
    for (std::size_t k = 0; k < st.totals.size(); ++k) {
      total.matches[k] += st.matches[k];
      total.totals[k] += st.totals[k];
    }
    total.cand_len += st.cand_len;
    total.ref_len += st.ref_len;
  }
  std::vector<double> out;
  for (int k = 1; k <= n; ++k) {
    BleuStats prefix = total;
    prefix.matches.resize(static_cast<std::size_t>(k));
    prefix.totals.resize(static_cast<std::size_t>(k));
    out.push_back(bleu_from_stats(prefix));
  }
  return out;
}

double rouge_l(std::string_view pred, std::span<const std::string> refs) {
  require_refs(refs, "rouge_l");
  const auto cand = tokenize(pred);
  if (cand.empty()) return 0.0;
  constexpr double kBeta = 1.2;
  double best_p = 0.0, best_r = 0.0;
  for (const auto& r : tokenize_all(refs)) {
    if (r.empty()) continue;
    const double lcs = static_cast<double>(lcs_length(cand, r));
    best_p = std::max(best_p, lcs / cand.size());
    best_r = std::max(best_r, lcs / r.size());
  }
  if (best_p <= 0.0 || best_r <= 0.0) return 0.0;
  return (1.0 + kBeta * kBeta) * best_p * best_r / (best_r + kBeta * kBeta * best_p);
}

std::string light_stem(std::string_view token) {
  std::string w(token);
  auto strip = [&](std::string_view suffix, std::string_view repl) {
    if (w.size() >= suffix.size() + 3 &&
        std::string_view(w).substr(w.size() - suffix.size()) == suffix) {
      w = w.substr(0, w.size() - suffix.size()) + std::string(repl);
      return true;
    }
    return false;
  };
  if (strip("ies", "y") || strip("ing", "") || strip("ed", "") || strip("es", "") ||
      strip("ly", "")) {
    return w;
  }
  if (w.size() >= 4 && w.back() == 's' && w[w.size() - 2] != 's') w.pop_back();
  return w;
}

double meteor_lite(std::string_view pred, std::span<const std::string> refs) {
  require_refs(refs, "meteor_lite");
  const auto cand = tokenize(pred);
  double best = 0.0;
  for (const auto& r : tokenize_all(refs)) best = std::max(best, meteor_single(cand, r));
  return best;
}

CiderResult cider(std::span<const CaptionSample> samples) {
  if (samples.empty()) throw InvalidArgument("cider: empty corpus");
  struct Prepared {
    std::array<NgramCounts, kCiderOrder> hyp;
    std::vector<std::array<NgramCounts, kCiderOrder>> refs;
  };
  std::vector<Prepared> prepared(samples.size());
  std::map<std::string, double> df;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    require_refs(samples[i].references, "cider");
    const auto hyp = tokenize(samples[i].prediction);
    std::set<std::string> seen;
    for (int n = 1; n <= kCiderOrder; ++n) prepared[i].hyp[n - 1] = ngrams(hyp, n);
    for (const auto& ref : samples[i].references) {
      const auto toks = tokenize(ref);
      auto& slot = prepared[i].refs.emplace_back();
      for (int n = 1; n <= kCiderOrder; ++n) {
        slot[n - 1] = ngrams(toks, n);
        for (const auto& [gram, c] : slot[n - 1]) seen.insert(gram);
      }
    }
    for (const auto& gram : seen) df[gram] += 1.0;
  }

  const double log_docs = std::log(static_cast<double>(samples.size()));
  using Vec = std::map<std::string, double>;
  auto tfidf = [&](const NgramCounts& counts, double& norm) {
    Vec v;
    double sq = 0.0;
    for (const auto& [gram, c] : counts) {
      const auto it = df.find(gram);
      const double d = it == df.end() ? 0.0 : it->second;
      const double w = c * (log_docs - std::log(std::max(1.0, d)));
      v[gram] = w;
      sq += w * w;
    }
    norm = std::sqrt(sq);
    return v;
  };

  CiderResult out;
  out.per_sample.reserve(samples.size());
  for (const auto& p : prepared) {
    std::array<Vec, kCiderOrder> hv;
    std::array<double, kCiderOrder> hn{};
    for (int n = 0; n < kCiderOrder; ++n) hv[n] = tfidf(p.hyp[n], hn[n]);
    double total = 0.0;
    for (const auto& ref : p.refs) {
      double per_ref = 0.0;
      for (int n = 0; n < kCiderOrder; ++n) {
        double rn = 0.0;
        const Vec rv = tfidf(ref[n], rn);
        double dot = 0.0;
        for (const auto& [gram, w] : hv[n]) {
          const auto it = rv.find(gram);
          if (it != rv.end()) dot += w * it->second;
        }
        if (hn[n] > 0.0 && rn > 0.0) per_ref += dot / (hn[n] * rn);
      }
      total += per_ref / kCiderOrder;
    }
    const double score = 10.0 * total / static_cast<double>(p.refs.size());
    out.per_sample.push_back(std::clamp(score, 0.0, 10.0));
  }
  double sum = 0.0;
  for (double s : out.per_sample) sum += s;
  out.mean = sum / static_cast<double>(out.per_sample.size());
  return out;
}

}  // namespace scenemark
