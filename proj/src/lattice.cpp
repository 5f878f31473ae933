#include "lsd/lattice.hpp"

namespace lsd {

BigInt count_decompositions(const std::string& y, const Vocabulary& v) {
  std::vector<BigInt> n(y.size() + 1);
  n[y.size()] = 1;
  for (std::size_t pos = y.size(); pos-- > 0;) {
    BigInt acc = 0;
    for (TokenId t : v.valid_extensions(y, pos)) {
      acc += n[pos + v.token(t).length()];
    }
    n[pos] = acc;
  }
  return n[0];
}

namespace {

void enumerate_rec(const std::string& y, const Vocabulary& v, std::size_t pos,
                   Decomposition& prefix, std::vector<Decomposition>& out) {
  if (pos == y.size()) {
    prefix.push_back(v.eos_id());
    out.push_back(prefix);
    prefix.pop_back();
    return;
  }
  // valid_extensions returns ids ascending, so depth-first order is
  // lexicographic by token-id sequence.
  for (TokenId t : v.valid_extensions(y, pos)) {
    prefix.push_back(t);
    enumerate_rec(y, v, pos + v.token(t).length(), prefix, out);
    prefix.pop_back();
  }
}

}  // namespace

DecompositionSet enumerate_decompositions(const std::string& y, const Vocabulary& v,
                                          std::size_t limit) {
  const BigInt count = count_decompositions(y, v);
  if (count > limit) {
    throw CapacityError("target has " + count.str() + " decompositions, above the limit of " +
                            std::to_string(limit),
                        count.str());
  }
  DecompositionSet set;
  set.target = y;
  Decomposition prefix;
  enumerate_rec(y, v, 0, prefix, set.items);
  return set;
}

}  // namespace lsd
