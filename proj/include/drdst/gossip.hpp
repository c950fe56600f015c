#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "drdst/core.hpp"

namespace drdst::gossip {

struct Schedule {
  std::vector<double> arrival;          // offset from the start, -1 if never reached
  std::vector<std::uint32_t> sends;     // messages sent per node
  std::vector<std::uint32_t> received;  // copies received per node, duplicates included
  std::vector<int> informed_by;         // first sender per node, -1 for the initiator
  int rounds = 0;
  std::uint64_t total_sends = 0;

  bool complete() const {
    return std::ranges::all_of(arrival, [](double a) { return a >= 0.0; });
  }
};

// Push gossip among n nodes. Each round every informed node sends to up to
// `fanout` random peers it does not yet know to be informed (it knows the
// peers it sent to and the one it heard from). A round lasts as long as its
// slowest send. `hop(a, b)` is the link latency between node indices.
template <typename HopLatency>
Schedule disseminate(std::size_t n, std::size_t initiator, int fanout, int round_cap, HopLatency&& hop, Rng& rng) {
  if (fanout < 1) throw DomainError("gossip: fanout must be >= 1");
  if (initiator >= n) throw DomainError("gossip: initiator out of range");
  Schedule s;
  s.arrival.assign(n, -1.0);
  s.sends.assign(n, 0);
  s.received.assign(n, 0);
  s.informed_by.assign(n, -1);
  s.arrival[initiator] = 0.0;
  std::size_t informed = 1;
  std::vector<std::vector<char>> known(n);
  auto know = [&](std::size_t a, std::size_t b) {
    if (known[a].empty()) known[a].assign(n, 0);
    known[a][b] = 1;
  };
  know(initiator, initiator);

  double start = 0.0;
  std::vector<std::size_t> candidates;
  std::vector<std::size_t> holders;
  while (informed < n && s.rounds < round_cap) {
    ++s.rounds;
    holders.clear();
    for (std::size_t i = 0; i < n; ++i)
      if (s.arrival[i] >= 0.0 && s.arrival[i] <= start) holders.push_back(i);
    double longest = 0.0;
    std::vector<std::pair<std::size_t, double>> reached;
    for (std::size_t a : holders) {
      candidates.clear();
      for (std::size_t b = 0; b < n; ++b)
        if (b != a && (known[a].empty() || !known[a][b])) candidates.push_back(b);
      const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(fanout), candidates.size());
      for (std::size_t j = 0; j < k; ++j) {
        const std::size_t pick = j + static_cast<std::size_t>(rng.below(candidates.size() - j));
        std::swap(candidates[j], candidates[pick]);
        const std::size_t b = candidates[j];
        know(a, b);
        ++s.sends[a];
        ++s.received[b];
        ++s.total_sends;
        const double lat = hop(a, b);
        longest = std::max(longest, lat);
        reached.emplace_back(b, start + lat);
        if (s.arrival[b] < 0.0 || start + lat < s.arrival[b]) {
          if (s.arrival[b] < 0.0) ++informed;
          s.arrival[b] = start + lat;
          s.informed_by[b] = static_cast<int>(a);
        }
      }
    }
    for (auto [b, t] : reached)
      if (s.informed_by[b] >= 0) know(b, static_cast<std::size_t>(s.informed_by[b]));
    start += longest;
    if (reached.empty()) break;
  }
  return s;
}

}  // namespace drdst::gossip
