#pragma once

#include <string>
#include <vector>

namespace swinoir {

// Which connection rule wires the transformer blocks together.
enum class ConnectionKind { kIntervalDense, kSkip };

const char* to_string(ConnectionKind kind);
ConnectionKind connection_kind_from_string(const std::string& name);

// For each block n (1-based), the set of earlier blocks whose outputs it
// consumes. sources[0] corresponds to block 1 and is always empty: the first
// block consumes the pre-extraction feature map directly.
struct ConnectionTopology {
  int block_count = 0;
  std::vector<std::vector<int>> sources;  // each sorted ascending, 1-based

  const std::vector<int>& sources_of(int block) const;  // block is 1-based
};

// Interval dense rule: block n consumes block 1 plus every earlier block of
// parity opposite to n. Odd n pulls [1, 2, 4, ..., n-1]; even n pulls
// [1, 3, 5, ..., n-1]. Block 1 has no predecessors.
std::vector<int> interval_dense_sources(int block, int total_blocks);

ConnectionTopology build_topology(int total_blocks);

// Plain chain baseline: each block consumes only its immediate predecessor.
ConnectionTopology skip_topology(int total_blocks);

ConnectionTopology make_topology(ConnectionKind kind, int total_blocks);

// Renders the topology as a graphviz digraph.
std::string topology_to_dot(const ConnectionTopology& topo, const std::string& name);

}  // namespace swinoir
