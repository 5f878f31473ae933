#include <algorithm>
#include <cstdio>
#include <sstream>
#include <unordered_map>

#include "lsd/decoding.hpp"

namespace lsd {

std::vector<NbestRow> collapse_nbest(const std::vector<Hypothesis>& hyps, const Vocabulary& v,
                                     bool merge) {
  for (const Hypothesis& h : hyps) {
    if (!h.finished) throw InvalidInputError("collapse_nbest requires finished hypotheses");
  }
  std::vector<NbestRow> rows;
  std::unordered_map<std::string, std::size_t> best_by_output;
  for (const Hypothesis& h : hyps) {
    std::string out = v.collapse(h.token_ids);
    if (merge) {
      auto it = best_by_output.find(out);
      if (it != best_by_output.end()) {
        if (h.log_prob > rows[it->second].log_prob) {
          rows[it->second] = NbestRow{std::move(out), h.token_ids, h.log_prob};
        }
        continue;
      }
      best_by_output.emplace(out, rows.size());
    }
    rows.push_back(NbestRow{std::move(out), h.token_ids, h.log_prob});
  }
  return rows;
}

std::string format_nbest_dump(const std::vector<Hypothesis>& hyps, const Vocabulary& v) {
  std::ostringstream out;
  char buf[32];
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.6f", hyps[i].log_prob);
    out << (i + 1) << '\t' << v.join_texts(hyps[i].token_ids, "|") << '\t' << buf << '\n';
  }
  return out.str();
}

namespace {

std::vector<std::string> split_words(const std::string& s) {
  std::vector<std::string> words;
  std::string cur;
  for (char c : s) {
    if (c == ' ') {
      if (!cur.empty()) words.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

template <typename Seq>
std::size_t levenshtein(const Seq& a, const Seq& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

EditDistanceResult edit_distance_metrics(const std::string& hyp, const std::string& ref,
                                         EditUnit unit) {
  EditDistanceResult r;
  if (unit == EditUnit::kWord) {
    const std::vector<std::string> h = split_words(hyp);
    const std::vector<std::string> g = split_words(ref);
    r.errors = levenshtein(h, g);
    r.ref_len = g.size();
  } else {
    r.errors = levenshtein(hyp, ref);
    r.ref_len = ref.size();
  }
  r.rate = r.ref_len == 0 ? static_cast<double>(r.errors)
                          : static_cast<double>(r.errors) / static_cast<double>(r.ref_len);
  return r;
}

std::map<std::size_t, double> coverage_distribution(const std::vector<Decomposition>& decomps,
                                                    const Vocabulary& v) {
  std::map<std::size_t, double> buckets;
  std::size_t total = 0;
  for (const Decomposition& z : decomps) {
    for (TokenId id : z) {
      const Token& t = v.token(id);
      if (t.is_eos || id == v.space_id()) continue;
      buckets[t.length()] += static_cast<double>(t.length());
      total += t.length();
    }
  }
  if (total > 0) {
    for (auto& [len, mass] : buckets) mass /= static_cast<double>(total);
  }
  return buckets;
}

}  // namespace lsd
