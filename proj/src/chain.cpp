#include "zrp/chain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace zrp {

double ChainSpec::total_weight() const {
  double s = 0.0;
  for (double w : pi_) s += w;
  return s;
}

void ChainSpec::add_rate(std::int64_t i, std::int64_t j, double rate) {
  if (i < 0 || j < 0 || i >= size() || j >= size() || i == j)
    throw std::invalid_argument("ChainSpec::add_rate: bad state pair");
  if (!(rate > 0.0)) throw std::invalid_argument("ChainSpec::add_rate: rate must be positive");
  auto& r = adj_[static_cast<std::size_t>(i)];
  for (auto& [k, v] : r)
    if (k == j) {
      v += rate;
      return;
    }
  r.emplace_back(static_cast<std::int32_t>(j), rate);
}

double ChainSpec::rate(std::int64_t i, std::int64_t j) const {
  for (const auto& [k, v] : adj_[static_cast<std::size_t>(i)])
    if (k == j) return v;
  return 0.0;
}

double ChainSpec::exit_rate(std::int64_t i) const {
  double s = 0.0;
  for (const auto& [k, v] : adj_[static_cast<std::size_t>(i)]) s += v;
  return s;
}

double ChainSpec::reversibility_defect() const {
  double worst = 0.0;
  for (std::int64_t i = 0; i < size(); ++i) {
    for (const auto& [j, rij] : adj_[static_cast<std::size_t>(i)]) {
      if (j < i) continue;  // each unordered pair once
      double fwd = pi_[static_cast<std::size_t>(i)] * rij;
      double bwd = pi_[static_cast<std::size_t>(j)] * rate(j, i);
      double scale = std::max({std::fabs(fwd), std::fabs(bwd), 1e-300});
      worst = std::max(worst, std::fabs(fwd - bwd) / scale);
    }
  }
  return worst;
}

void ChainSpec::validate_reversible(double tol) const {
  double d = reversibility_defect();
  if (d > tol)
    throw std::runtime_error("ChainSpec: detailed balance violated, relative defect " +
                             std::to_string(d));
}

bool ChainSpec::connected() const {
  if (size() == 0) return true;
  std::vector<char> seen(static_cast<std::size_t>(size()), 0);
  std::vector<std::int64_t> stack{0};
  seen[0] = 1;
  std::int64_t count = 1;
  while (!stack.empty()) {
    std::int64_t i = stack.back();
    stack.pop_back();
    for (const auto& [j, v] : adj_[static_cast<std::size_t>(i)]) {
      (void)v;
      if (!seen[static_cast<std::size_t>(j)]) {
        seen[static_cast<std::size_t>(j)] = 1;
        ++count;
        stack.push_back(j);
      }
    }
  }
  return count == size();
}

ChainSpec ring_chain(std::int64_t L) {
  if (L < 2) throw std::invalid_argument("ring_chain: L must be at least 2");
  ChainSpec c(L);
  for (std::int64_t i = 0; i < L; ++i) {
    c.set_weight(i, 1.0 / static_cast<double>(L));
    c.add_rate(i, (i + 1) % L, 1.0);
    c.add_rate(i, (i + L - 1) % L, 1.0);
  }
  return c;
}

double dirichlet_form(const ChainSpec& chain, std::span<const double> f) {
  if (static_cast<std::int64_t>(f.size()) != chain.size())
    throw std::invalid_argument("dirichlet_form: f size mismatch");
  double s = 0.0;
  for (std::int64_t i = 0; i < chain.size(); ++i) {
    for (const auto& [j, rij] : chain.row(i)) {
      double d = f[static_cast<std::size_t>(j)] - f[static_cast<std::size_t>(i)];
      s += chain.weight(i) * rij * d * d;
    }
  }
  return 0.5 * s;
}

void write_edge_list(const ChainSpec& chain, std::ostream& os) {
  char buf[96];
  for (std::int64_t i = 0; i < chain.size(); ++i) {
    std::snprintf(buf, sizeof buf, "pi %lld %.17g", static_cast<long long>(i), chain.weight(i));
    os << buf << '\n';
  }
  for (std::int64_t i = 0; i < chain.size(); ++i) {
    for (const auto& [j, rij] : chain.row(i)) {
      std::snprintf(buf, sizeof buf, "%lld %d %.17g", static_cast<long long>(i), j, rij);
      os << buf << '\n';
    }
  }
}

ChainSpec read_edge_list(std::istream& is) {
  struct Edge {
    std::int64_t i, j;
    double r;
  };
  std::vector<std::pair<std::int64_t, double>> weights;
  std::vector<Edge> edges;
  std::int64_t n = 0;
  std::string line;
  while (std::getline(is, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string first;
    if (!(ss >> first)) continue;
    if (first == "pi") {
      std::int64_t i;
      double w;
      if (!(ss >> i >> w)) throw std::runtime_error("read_edge_list: malformed pi line");
      weights.emplace_back(i, w);
      n = std::max(n, i + 1);
    } else {
      std::int64_t i = std::stoll(first), j;
      double r;
      if (!(ss >> j >> r)) throw std::runtime_error("read_edge_list: malformed edge line");
      edges.push_back({i, j, r});
      n = std::max({n, i + 1, j + 1});
    }
  }
  ChainSpec c(n);
  for (auto& [i, w] : weights) c.set_weight(i, w);
  for (auto& e : edges) c.add_rate(e.i, e.j, e.r);
  return c;
}

}  // namespace zrp
