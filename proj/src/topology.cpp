#include "swinoir/topology.hpp"

#include <sstream>
#include <stdexcept>

namespace swinoir {

const char* to_string(ConnectionKind kind) {
  return kind == ConnectionKind::kIntervalDense ? "interval-dense" : "skip";
}

ConnectionKind connection_kind_from_string(const std::string& name) {
  if (name == "interval-dense" || name == "interval_dense") {
    return ConnectionKind::kIntervalDense;
  }
  if (name == "skip") return ConnectionKind::kSkip;
  throw std::invalid_argument("unknown connection kind '" + name +
                              "' (expected interval-dense or skip)");
}

const std::vector<int>& ConnectionTopology::sources_of(int block) const {
  if (block < 1 || block > block_count) {
    throw std::invalid_argument("block " + std::to_string(block) +
                                " out of range 1.." + std::to_string(block_count));
  }
  return sources[static_cast<size_t>(block - 1)];
}

std::vector<int> interval_dense_sources(int block, int total_blocks) {
  if (total_blocks < 1) {
    throw std::invalid_argument("total_blocks must be >= 1, got " +
                                std::to_string(total_blocks));
  }
  if (block < 1 || block > total_blocks) {
    throw std::invalid_argument("block " + std::to_string(block) +
                                " out of range 1.." + std::to_string(total_blocks));
  }
  std::vector<int> out;
  if (block == 1) return out;
  out.push_back(1);
  // Earlier blocks of parity opposite to `block`, i.e. sharing the parity of
  // block - 1.
  const int parity = (block - 1) % 2;
  for (int k = 2; k < block; ++k) {
    if (k % 2 == parity) out.push_back(k);
  }
  return out;
}

ConnectionTopology build_topology(int total_blocks) {
  if (total_blocks < 1) {
    throw std::invalid_argument("total_blocks must be >= 1, got " +
                                std::to_string(total_blocks));
  }
  ConnectionTopology topo;
  topo.block_count = total_blocks;
  topo.sources.reserve(static_cast<size_t>(total_blocks));
  for (int n = 1; n <= total_blocks; ++n) {
    topo.sources.push_back(interval_dense_sources(n, total_blocks));
  }
  return topo;
}

ConnectionTopology skip_topology(int total_blocks) {
  if (total_blocks < 1) {
    throw std::invalid_argument("total_blocks must be >= 1, got " +
                                std::to_string(total_blocks));
  }
  ConnectionTopology topo;
  topo.block_count = total_blocks;
  topo.sources.resize(static_cast<size_t>(total_blocks));
  for (int n = 2; n <= total_blocks; ++n) {
    topo.sources[static_cast<size_t>(n - 1)] = {n - 1};
  }
  return topo;
}

ConnectionTopology make_topology(ConnectionKind kind, int total_blocks) {
  return kind == ConnectionKind::kIntervalDense ? build_topology(total_blocks)
                                                : skip_topology(total_blocks);
}

std::string topology_to_dot(const ConnectionTopology& topo, const std::string& name) {
  std::ostringstream os;
  os << "digraph " << name << " {\n";
  os << "  rankdir=LR;\n";
  os << "  pre [shape=box];\n";
  for (int n = 1; n <= topo.block_count; ++n) {
    os << "  b" << n << " [label=\"IDSTB " << n << "\"];\n";
  }
  os << "  pre -> b1;\n";
  for (int n = 2; n <= topo.block_count; ++n) {
    for (int src : topo.sources_of(n)) {
      os << "  b" << src << " -> b" << n << ";\n";
    }
  }
  os << "}\n";
  return os.str();
}

}  // namespace swinoir
