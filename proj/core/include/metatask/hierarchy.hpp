#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace metatask {

/// Opaque synset token, e.g. "n02084071". Non-empty, no whitespace.
using SynsetId = std::string;

using NodeIndex = std::int32_t;

/// Directed acyclic child->parent (hypernym) graph over synset ids, with a
/// marked subset of leaf "class" nodes. Immutable after construction; all
/// queries are const and safe to call concurrently.
class HierarchyGraph {
public:
    /// Parses "child<TAB>parent" edges and "synset<TAB>label" class lines.
    /// '#'-prefixed and blank lines are ignored. Rejects cycles, malformed
    /// lines (with line number) and class ids that appear in no edge.
    static HierarchyGraph load(const std::filesystem::path& edge_file,
                               const std::filesystem::path& class_list_file);

    /// Programmatic construction (tests, generators). Same validation as load().
    static HierarchyGraph from_edges(const std::vector<std::pair<SynsetId, SynsetId>>& edges,
                                     const std::vector<SynsetId>& class_ids);

    std::size_t node_count() const { return ids_.size(); }
    std::size_t edge_count() const { return edge_count_; }
    std::size_t class_count() const { return class_leaves_.size(); }

    bool has_node(const SynsetId& id) const { return index_of_.contains(id); }
    NodeIndex index_of(const SynsetId& id) const;  // throws ValidationError if unknown
    const SynsetId& id_of(NodeIndex n) const { return ids_.at(static_cast<std::size_t>(n)); }

    bool is_class_leaf(NodeIndex n) const { return is_class_.at(static_cast<std::size_t>(n)); }
    const std::vector<NodeIndex>& class_leaves() const { return class_leaves_; }

    const std::vector<NodeIndex>& children(NodeIndex n) const {
        return children_.at(static_cast<std::size_t>(n));
    }
    const std::vector<NodeIndex>& parents(NodeIndex n) const {
        return parents_.at(static_cast<std::size_t>(n));
    }

    /// Class leaves reachable from root by descending child edges, in
    /// ascending node-index order. The root is included if it is itself a
    /// class leaf.
    std::vector<NodeIndex> class_leaves_under(NodeIndex root) const;
    std::vector<SynsetId> class_leaves_under(const SynsetId& root) const;

    /// Strict ancestors of n (nodes reachable by ascending parent edges).
    std::vector<NodeIndex> ancestors_of(NodeIndex n) const;

private:
    HierarchyGraph() = default;
    NodeIndex intern(const SynsetId& id);
    void finalize(const std::vector<SynsetId>& class_ids);
    void check_acyclic() const;

    std::vector<SynsetId> ids_;
    std::unordered_map<SynsetId, NodeIndex> index_of_;
    std::vector<std::vector<NodeIndex>> children_;
    std::vector<std::vector<NodeIndex>> parents_;
    std::vector<bool> is_class_;
    std::vector<NodeIndex> class_leaves_;
    std::size_t edge_count_ = 0;
};

/// Selected cluster roots and the classes sampled beneath them; the ground
/// truth for hard-task membership.
struct ClusterManifest {
    struct Cluster {
        SynsetId root;
        std::vector<SynsetId> classes;
    };

    std::uint64_t seed = 0;
    std::vector<Cluster> clusters;

    std::size_t total_classes() const;

    /// Stable-key JSON: {"seed": ..., "clusters": [{"root": ..., "classes": [...]}]}.
    /// Identical manifests serialize to identical bytes.
    void save(const std::filesystem::path& path) const;
    static ClusterManifest load(const std::filesystem::path& path);
};

/// Picks n_clusters roots whose class-leaf descendant counts lie in
/// [min_leaves, max_leaves], mutually non-nested (no selected root is an
/// ancestor or descendant of another), uniformly without replacement among
/// eligible roots under rng_seed.
std::vector<SynsetId> select_cluster_roots(const HierarchyGraph& graph,
                                           std::size_t min_leaves,
                                           std::size_t max_leaves,
                                           std::size_t n_clusters,
                                           std::uint64_t rng_seed);

/// Samples per_cluster classes uniformly without replacement from each root's
/// class leaves. A leaf reachable from several roots is assigned to the first
/// root that draws it (clusters stay disjoint).
ClusterManifest build_manifest(const HierarchyGraph& graph,
                               const std::vector<SynsetId>& roots,
                               std::size_t per_cluster,
                               std::uint64_t rng_seed);

}  // namespace metatask
