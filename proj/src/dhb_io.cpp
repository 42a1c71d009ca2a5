#include <cstdio>
#include <ostream>
#include <string>

#include "xmr/dhb.hpp"

namespace xmr {

double trajectory_invariant_distance(std::span<const Posed> a, std::span<const Posed> b, std::size_t window) {
  if (window < 3) throw std::invalid_argument("window must be at least 3");
  if (a.size() != b.size()) throw std::invalid_argument("trajectories differ in length");
  if (a.size() < window) throw std::invalid_argument("trajectory shorter than window");
  double total = 0.0;
  for (std::size_t start = 0; start + window <= a.size(); ++start) {
    const auto ia = dhb_transform<double>(a.subspan(start, window));
    const auto ib = dhb_transform<double>(b.subspan(start, window));
    total += dhb_distance(ia, ib);
  }
  return total;
}

namespace {

void write_column(std::ostream& out, const DhbInvariantsd& inv, Eigen::Index c) {
  char buf[32];
  for (int r = 0; r < kDhbChannels; ++r) {
    std::snprintf(buf, sizeof(buf), "%.17g", inv.channels(r, c));
    out << (r ? "," : "") << buf;
  }
  out << '\n';
}

}  // namespace

void write_invariants_csv(std::ostream& out, const DhbInvariantsd& inv) {
  for (int r = 0; r < kDhbChannels; ++r) out << (r ? "," : "") << kDhbChannelNames[r];
  out << '\n';
  for (Eigen::Index c = 0; c < inv.columns(); ++c) write_column(out, inv, c);
}

void write_sliding_invariants_csv(std::ostream& out, std::span<const Posed> poses, std::size_t window) {
  if (window < 3) throw std::invalid_argument("window must be at least 3");
  if (poses.size() < window) {
    throw std::invalid_argument("trajectory has " + std::to_string(poses.size()) + " samples, shorter than window " +
                                std::to_string(window));
  }
  out << "window,column";
  for (const char* name : kDhbChannelNames) out << ',' << name;
  out << '\n';
  for (std::size_t start = 0; start + window <= poses.size(); ++start) {
    const auto inv = dhb_transform<double>(poses.subspan(start, window));
    for (Eigen::Index c = 0; c < inv.columns(); ++c) {
      out << start << ',' << c << ',';
      write_column(out, inv, c);
    }
  }
}

}  // namespace xmr
