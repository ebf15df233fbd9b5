#pragma once

#include <string>
#include <vector>

#include "repot/env/types.hpp"
#include "repot/util.hpp"

namespace repot::hanoi {

inline std::string action_text(const HanoiMove& m) {
  return "move(" + std::to_string(m.disk) + "," + std::to_string(m.from) + "," +
         std::to_string(m.to) + ")";
}

inline std::string render(const HanoiState& s) {
  std::string out;
  for (int p = 0; p < 3; ++p) {
    if (p) out += ' ';
    out += "peg" + std::to_string(p) + ": [";
    for (size_t i = 0; i < s.pegs[p].size(); ++i) {
      if (i) out += ',';
      out += std::to_string(s.pegs[p][i]);
    }
    out += ']';
  }
  return out;
}

inline bool well_formed(const HanoiState& s) {
  std::vector<bool> seen(static_cast<size_t>(s.n_disks) + 1, false);
  int count = 0;
  for (const auto& peg : s.pegs) {
    for (size_t i = 0; i < peg.size(); ++i) {
      int d = peg[i];
      if (d < 1 || d > s.n_disks || seen[static_cast<size_t>(d)]) return false;
      if (i > 0 && peg[i - 1] <= d) return false;  // larger disks below smaller
      seen[static_cast<size_t>(d)] = true;
      ++count;
    }
  }
  return count == s.n_disks;
}

inline StepResult step(const HanoiState& s, const HanoiMove& m) {
  StepResult r{false, s, ""};
  if (m.from < 0 || m.from > 2) {
    r.error = "peg " + std::to_string(m.from) + " is out of range";
    return r;
  }
  if (m.to < 0 || m.to > 2) {
    r.error = "peg " + std::to_string(m.to) + " is out of range";
    return r;
  }
  if (m.from == m.to) {
    r.error = "source and destination pegs are the same";
    return r;
  }
  if (m.disk < 1 || m.disk > s.n_disks) {
    r.error = "disk " + std::to_string(m.disk) + " does not exist";
    return r;
  }
  const auto& src = s.pegs[static_cast<size_t>(m.from)];
  if (src.empty()) {
    r.error = "peg " + std::to_string(m.from) + " is empty";
    return r;
  }
  if (src.back() != m.disk) {
    r.error = "disk " + std::to_string(m.disk) + " is not the top disk of peg " +
              std::to_string(m.from);
    return r;
  }
  const auto& dst = s.pegs[static_cast<size_t>(m.to)];
  if (!dst.empty() && dst.back() < m.disk) {
    r.error = "disk " + std::to_string(m.disk) + " cannot be placed on smaller disk " +
              std::to_string(dst.back());
    return r;
  }
  HanoiState next = s;
  next.pegs[static_cast<size_t>(m.from)].pop_back();
  next.pegs[static_cast<size_t>(m.to)].push_back(m.disk);
  r.valid = true;
  r.next_state = std::move(next);
  r.error.clear();
  return r;
}

inline std::vector<HanoiMove> legal_actions(const HanoiState& s) {
  std::vector<HanoiMove> out;
  for (int f = 0; f < 3; ++f) {
    const auto& src = s.pegs[static_cast<size_t>(f)];
    if (src.empty()) continue;
    int d = src.back();
    for (int t = 0; t < 3; ++t) {
      if (t == f) continue;
      const auto& dst = s.pegs[static_cast<size_t>(t)];
      if (dst.empty() || dst.back() > d) out.push_back({d, f, t});
    }
  }
  std::sort(out.begin(), out.end(), [](const HanoiMove& a, const HanoiMove& b) {
    return action_text(a) < action_text(b);
  });
  return out;
}

// The bounded universe of syntactically sensible moves, legal or not.
inline std::vector<HanoiMove> candidate_actions(const HanoiState& s) {
  std::vector<HanoiMove> out;
  for (int d = 1; d <= s.n_disks; ++d)
    for (int f = 0; f < 3; ++f)
      for (int t = 0; t < 3; ++t)
        if (f != t) out.push_back({d, f, t});
  return out;
}

inline HanoiState classic_state(int n, int peg) {
  HanoiState s;
  s.n_disks = n;
  for (int d = n; d >= 1; --d) s.pegs[static_cast<size_t>(peg)].push_back(d);
  return s;
}

}  // namespace repot::hanoi
