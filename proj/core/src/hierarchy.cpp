#include "metatask/hierarchy.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "metatask/errors.hpp"
#include "metatask/rng.hpp"

namespace metatask {

namespace {

bool valid_synset_token(const SynsetId& id) {
    if (id.empty()) return false;
    for (const char c : id) {
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f') return false;
    }
    return true;
}

// Splits "left<TAB>right"; returns false on malformed input.
bool split_tab_line(const std::string& line, std::string& left, std::string& right) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos) return false;
    left = line.substr(0, tab);
    right = line.substr(tab + 1);
    if (!right.empty() && right.back() == '\r') right.pop_back();
    return !left.empty() && !right.empty();
}

bool skippable(const std::string& line) {
    return line.empty() || line[0] == '#' || line == "\r";
}

}  // namespace

NodeIndex HierarchyGraph::index_of(const SynsetId& id) const {
    const auto it = index_of_.find(id);
    if (it == index_of_.end()) {
        throw ValidationError("unknown synset id '" + id + "'");
    }
    return it->second;
}

NodeIndex HierarchyGraph::intern(const SynsetId& id) {
    const auto it = index_of_.find(id);
    if (it != index_of_.end()) return it->second;
    const auto n = static_cast<NodeIndex>(ids_.size());
    ids_.push_back(id);
    index_of_.emplace(id, n);
    children_.emplace_back();
    parents_.emplace_back();
    return n;
}

HierarchyGraph HierarchyGraph::load(const std::filesystem::path& edge_file,
                                    const std::filesystem::path& class_list_file) {
    std::ifstream edges(edge_file);
    if (!edges) throw ValidationError("cannot open edge file '" + edge_file.string() + "'");
    std::ifstream classes(class_list_file);
    if (!classes) {
        throw ValidationError("cannot open class list file '" + class_list_file.string() + "'");
    }

    std::vector<std::pair<SynsetId, SynsetId>> edge_list;
    std::string line, child, parent;
    std::size_t line_no = 0;
    while (std::getline(edges, line)) {
        ++line_no;
        if (skippable(line)) continue;
        if (!split_tab_line(line, child, parent) || !valid_synset_token(child) ||
            !valid_synset_token(parent)) {
            throw ValidationError("malformed edge at " + edge_file.filename().string() + ":" +
                                  std::to_string(line_no) + " (expected child<TAB>parent)");
        }
        edge_list.emplace_back(child, parent);
    }

    std::vector<SynsetId> class_ids;
    std::string id, label;
    line_no = 0;
    while (std::getline(classes, line)) {
        ++line_no;
        if (skippable(line)) continue;
        if (!split_tab_line(line, id, label) || !valid_synset_token(id)) {
            throw ValidationError("malformed class at " + class_list_file.filename().string() +
                                  ":" + std::to_string(line_no) +
                                  " (expected synset_id<TAB>label)");
        }
        class_ids.push_back(id);
    }

    return from_edges(edge_list, class_ids);
}

HierarchyGraph HierarchyGraph::from_edges(const std::vector<std::pair<SynsetId, SynsetId>>& edges,
                                          const std::vector<SynsetId>& class_ids) {
    HierarchyGraph g;
    std::unordered_set<std::string> seen;  // edges are a set; duplicates collapse
    seen.reserve(edges.size());
    for (const auto& [child, parent] : edges) {
        if (!valid_synset_token(child) || !valid_synset_token(parent)) {
            throw ValidationError("invalid synset token in edge ('" + child + "' -> '" + parent +
                                  "')");
        }
        if (!seen.insert(child + "\t" + parent).second) continue;
        const NodeIndex c = g.intern(child);
        const NodeIndex p = g.intern(parent);
        g.parents_[static_cast<std::size_t>(c)].push_back(p);
        g.children_[static_cast<std::size_t>(p)].push_back(c);
        ++g.edge_count_;
    }
    g.finalize(class_ids);
    return g;
}

void HierarchyGraph::finalize(const std::vector<SynsetId>& class_ids) {
    is_class_.assign(ids_.size(), false);
    for (const auto& id : class_ids) {
        const auto it = index_of_.find(id);
        if (it == index_of_.end()) {
            throw ValidationError("class id '" + id + "' is absent from the hierarchy node set");
        }
        if (!is_class_[static_cast<std::size_t>(it->second)]) {
            is_class_[static_cast<std::size_t>(it->second)] = true;
            class_leaves_.push_back(it->second);
        }
    }
    std::sort(class_leaves_.begin(), class_leaves_.end());
    check_acyclic();
}

void HierarchyGraph::check_acyclic() const {
    // Kahn over child->parent edges; any node never released sits on a cycle.
    std::vector<std::size_t> pending(ids_.size());  // unprocessed children per node
    for (std::size_t n = 0; n < ids_.size(); ++n) pending[n] = children_[n].size();

    std::deque<NodeIndex> frontier;
    for (std::size_t n = 0; n < ids_.size(); ++n) {
        if (pending[n] == 0) frontier.push_back(static_cast<NodeIndex>(n));
    }
    std::size_t released = 0;
    while (!frontier.empty()) {
        const NodeIndex n = frontier.front();
        frontier.pop_front();
        ++released;
        for (const NodeIndex p : parents_[static_cast<std::size_t>(n)]) {
            if (--pending[static_cast<std::size_t>(p)] == 0) frontier.push_back(p);
        }
    }
    if (released != ids_.size()) {
        for (std::size_t n = 0; n < ids_.size(); ++n) {
            if (pending[n] != 0) {
                throw ValidationError("cycle detected in hierarchy involving '" + ids_[n] + "'");
            }
        }
    }
}

std::vector<NodeIndex> HierarchyGraph::class_leaves_under(NodeIndex root) const {
    if (root < 0 || static_cast<std::size_t>(root) >= ids_.size()) {
        throw ValidationError("unknown root node index " + std::to_string(root));
    }
    std::vector<bool> visited(ids_.size(), false);
    std::vector<NodeIndex> stack{root};
    visited[static_cast<std::size_t>(root)] = true;
    std::vector<NodeIndex> leaves;
    while (!stack.empty()) {
        const NodeIndex n = stack.back();
        stack.pop_back();
        if (is_class_[static_cast<std::size_t>(n)]) leaves.push_back(n);
        for (const NodeIndex c : children_[static_cast<std::size_t>(n)]) {
            if (!visited[static_cast<std::size_t>(c)]) {
                visited[static_cast<std::size_t>(c)] = true;
                stack.push_back(c);
            }
        }
    }
    std::sort(leaves.begin(), leaves.end());
    return leaves;
}

std::vector<SynsetId> HierarchyGraph::class_leaves_under(const SynsetId& root) const {
    std::vector<SynsetId> out;
    for (const NodeIndex n : class_leaves_under(index_of(root))) out.push_back(id_of(n));
    return out;
}

std::vector<NodeIndex> HierarchyGraph::ancestors_of(NodeIndex n) const {
    std::vector<bool> visited(ids_.size(), false);
    std::vector<NodeIndex> stack{n};
    std::vector<NodeIndex> out;
    while (!stack.empty()) {
        const NodeIndex cur = stack.back();
        stack.pop_back();
        for (const NodeIndex p : parents_[static_cast<std::size_t>(cur)]) {
            if (!visited[static_cast<std::size_t>(p)]) {
                visited[static_cast<std::size_t>(p)] = true;
                out.push_back(p);
                stack.push_back(p);
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::size_t ClusterManifest::total_classes() const {
    std::size_t n = 0;
    for (const auto& c : clusters) n += c.classes.size();
    return n;
}

void ClusterManifest::save(const std::filesystem::path& path) const {
    nlohmann::ordered_json j;
    j["seed"] = seed;
    j["clusters"] = nlohmann::ordered_json::array();
    for (const auto& c : clusters) {
        nlohmann::ordered_json jc;
        jc["root"] = c.root;
        jc["classes"] = c.classes;
        j["clusters"].push_back(std::move(jc));
    }
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write manifest '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

ClusterManifest ClusterManifest::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open manifest '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("invalid manifest JSON '" + path.string() + "': " + e.what());
    }
    ClusterManifest m;
    try {
        m.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& jc : j.at("clusters")) {
            ClusterManifest::Cluster c;
            c.root = jc.at("root").get<std::string>();
            c.classes = jc.at("classes").get<std::vector<std::string>>();
            m.clusters.push_back(std::move(c));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("manifest '" + path.string() + "' missing fields: " + e.what());
    }
    return m;
}

std::vector<SynsetId> select_cluster_roots(const HierarchyGraph& graph,
                                           std::size_t min_leaves,
                                           std::size_t max_leaves,
                                           std::size_t n_clusters,
                                           std::uint64_t rng_seed) {
    if (min_leaves > max_leaves) {
        throw ValidationError("select_cluster_roots: min_leaves > max_leaves");
    }
    if (n_clusters == 0) throw ValidationError("select_cluster_roots: n_clusters must be >= 1");

    // Leaf-descendant counts for every node, bottom-up over the DAG. Bitsets
    // keep multi-parent leaves counted once.
    const std::size_t n_nodes = graph.node_count();
    const std::size_t n_classes = graph.class_count();
    const std::size_t words = (n_classes + 63) / 64;
    std::vector<std::uint64_t> leafset(n_nodes * words, 0);
    std::vector<std::int32_t> class_slot(n_nodes, -1);
    for (std::size_t i = 0; i < n_classes; ++i) {
        class_slot[static_cast<std::size_t>(graph.class_leaves()[i])] =
            static_cast<std::int32_t>(i);
    }

    // Topological order: children before parents.
    std::vector<std::size_t> pending(n_nodes);
    std::vector<NodeIndex> order;
    order.reserve(n_nodes);
    for (std::size_t n = 0; n < n_nodes; ++n) {
        pending[n] = graph.children(static_cast<NodeIndex>(n)).size();
        if (pending[n] == 0) order.push_back(static_cast<NodeIndex>(n));
    }
    for (std::size_t head = 0; head < order.size(); ++head) {
        const NodeIndex n = order[head];
        for (const NodeIndex p : graph.parents(n)) {
            if (--pending[static_cast<std::size_t>(p)] == 0) order.push_back(p);
        }
    }

    std::vector<std::size_t> leaf_count(n_nodes, 0);
    for (const NodeIndex n : order) {
        auto* bits = &leafset[static_cast<std::size_t>(n) * words];
        if (class_slot[static_cast<std::size_t>(n)] >= 0) {
            const auto s = static_cast<std::size_t>(class_slot[static_cast<std::size_t>(n)]);
            bits[s / 64] |= std::uint64_t{1} << (s % 64);
        }
        for (const NodeIndex c : graph.children(n)) {
            const auto* cb = &leafset[static_cast<std::size_t>(c) * words];
            for (std::size_t w = 0; w < words; ++w) bits[w] |= cb[w];
        }
        std::size_t count = 0;
        for (std::size_t w = 0; w < words; ++w) count += std::popcount(bits[w]);
        leaf_count[static_cast<std::size_t>(n)] = count;
    }

    std::vector<NodeIndex> eligible;
    for (std::size_t n = 0; n < n_nodes; ++n) {
        if (leaf_count[n] >= min_leaves && leaf_count[n] <= max_leaves) {
            eligible.push_back(static_cast<NodeIndex>(n));
        }
    }

    // Uniform without replacement over eligible roots; a draw nested with an
    // already-chosen root is discarded.
    Rng rng(rng_seed);
    std::vector<NodeIndex> shuffled;
    shuffled.reserve(eligible.size());
    for (const std::size_t i : rng.sample_without_replacement(eligible.size(), eligible.size())) {
        shuffled.push_back(eligible[i]);
    }

    std::vector<NodeIndex> chosen;
    std::unordered_set<NodeIndex> chosen_set;
    std::unordered_set<NodeIndex> chosen_ancestors;  // union over chosen roots
    for (const NodeIndex cand : shuffled) {
        if (chosen.size() == n_clusters) break;
        if (chosen_ancestors.contains(cand)) continue;  // cand is an ancestor of a chosen root
        bool nested = false;
        const auto cand_ancestors = graph.ancestors_of(cand);
        for (const NodeIndex a : cand_ancestors) {
            if (chosen_set.contains(a)) {
                nested = true;  // cand is a descendant of a chosen root
                break;
            }
        }
        if (nested) continue;
        chosen.push_back(cand);
        chosen_set.insert(cand);
        for (const NodeIndex a : cand_ancestors) chosen_ancestors.insert(a);
    }

    if (chosen.size() < n_clusters) {
        throw ValidationError("only " + std::to_string(chosen.size()) +
                              " mutually non-nested eligible cluster roots found, need " +
                              std::to_string(n_clusters));
    }
    std::vector<SynsetId> out;
    out.reserve(chosen.size());
    for (const NodeIndex n : chosen) out.push_back(graph.id_of(n));
    return out;
}

ClusterManifest build_manifest(const HierarchyGraph& graph,
                               const std::vector<SynsetId>& roots,
                               std::size_t per_cluster,
                               std::uint64_t rng_seed) {
    if (per_cluster == 0) throw ValidationError("build_manifest: per_cluster must be >= 1");
    ClusterManifest manifest;
    manifest.seed = rng_seed;
    Rng rng(rng_seed);
    std::unordered_set<NodeIndex> used;
    for (const auto& root : roots) {
        const auto all_leaves = graph.class_leaves_under(graph.index_of(root));
        std::vector<NodeIndex> avail;
        for (const NodeIndex l : all_leaves) {
            if (!used.contains(l)) avail.push_back(l);
        }
        if (avail.size() < per_cluster) {
            throw ValidationError("root '" + root + "' has " + std::to_string(avail.size()) +
                                  " unassigned class leaves, need " + std::to_string(per_cluster));
        }
        ClusterManifest::Cluster cluster;
        cluster.root = root;
        for (const std::size_t i : rng.sample_without_replacement(avail.size(), per_cluster)) {
            cluster.classes.push_back(graph.id_of(avail[i]));
            used.insert(avail[i]);
        }
        manifest.clusters.push_back(std::move(cluster));
    }
    return manifest;
}

}  // namespace metatask
