#pragma once

#include <vector>

#include "agfem/fe_space.hpp"

namespace agfem {

/// Deterministic single-process model of the distributed-memory setup: the
/// simulator holds the global state and restricts per-subdomain views to it.
struct GlobalBuild {
  const ForestMesh& mesh;
  const CellClassification& classes;
  const RootCellMap& roots;
  const VefTable& vefs;
  const DofTable& dofs;
  const DofClassification& dclass;
  const std::vector<Constraint>& hanging;
  const ConstraintSet& cs;
};

struct PartitionLayout {
  int n_subdomains = 1;
  std::vector<int> owner;  // per leaf
  std::vector<std::vector<int>> local;        // contiguous SFC chunks
  std::vector<std::vector<int>> true_ghost;   // closure-adjacent non-local leaves
  std::vector<std::vector<int>> remote_ghost; // imported roots + their coarser
                                              // neighbors
};

/// Contiguous space-filling-curve chunks with cell counts differing by at
/// most one.
PartitionLayout partition_sfc(const ForestMesh& mesh, int n_subdomains);

/// Fills the ghost sets. True ghosts are the non-local leaves whose closure
/// touches the subdomain closure. Remote ghosts cover the aggregation
/// constraint closure: for every root referenced by a constraint of a local
/// DOF, the root itself and the coarser cells around it, when missing from
/// local-plus-true-ghost.
void build_ghost_layers(PartitionLayout& layout, const GlobalBuild& g);

struct ExchangeResult {
  // Per DOF: classification agreed by the owning subdomains; equals the
  // serial classification (asserted).
  std::vector<DofLabel> merged;
  int exchanged_flags = 0;  // flags contributed by non-owner subdomains
};

/// Simulates the one-round nearest-neighbour exchange of well-posedness: each
/// subdomain computes provisional free-DOF status from its local+true-ghost
/// scope, then statuses of shared DOFs are merged by logical OR. Throws
/// InvariantViolation if any local DOF disagrees with the serial
/// classification after the single round.
ExchangeResult exchange_wellposed_status(const PartitionLayout& layout,
                                         const GlobalBuild& g);

struct SubdomainReport {
  int subdomain = 0;
  int n_local = 0;
  int n_true_ghost = 0;
  int n_remote_ghost = 0;
  int constraints_checked = 0;
  int max_masters = 0;
};

struct DistributedCheckReport {
  std::vector<SubdomainReport> subdomains;
  int total_constraints_checked = 0;
  int max_remote_ghost = 0;
  double ghost_overhead_ratio = 0.0;  // (TG+RG cells) / local cells, max over S
};

/// Rebuilds every local constrained DOF per subdomain using only cells in
/// local+TG+RG and asserts exact equality with the serial constraint set.
/// Throws InvariantViolation naming the DOF and subdomain when a master
/// cannot be resolved inside the view or a coefficient deviates.
DistributedCheckReport verify_distributed_constraints(const PartitionLayout& layout,
                                                      const GlobalBuild& g);

}  // namespace agfem
