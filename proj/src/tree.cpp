#include "ttb/tree.hpp"

#include <algorithm>
#include <istream>
#include <set>
#include <sstream>

namespace ttb {

ModeSet::ModeSet(std::vector<int> indices) : indices_(std::move(indices)) {
    if (indices_.empty())
        throw TreeError(TreeError::Kind::NonPartitionChildren, "empty mode set");
    std::sort(indices_.begin(), indices_.end());
    for (std::size_t i = 0; i + 1 < indices_.size(); ++i)
        if (indices_[i] == indices_[i + 1])
            throw TreeError(TreeError::Kind::NonPartitionChildren,
                            "duplicate mode index " + std::to_string(indices_[i] + 1));
    if (indices_.front() < 0)
        throw TreeError(TreeError::Kind::NonPartitionChildren, "negative mode index");
}

ModeSet ModeSet::range(int d) {
    std::vector<int> idx(d);
    for (int j = 0; j < d; ++j) idx[j] = j;
    return ModeSet(std::move(idx));
}

bool ModeSet::contains(int j) const {
    return std::binary_search(indices_.begin(), indices_.end(), j);
}

bool ModeSet::is_subset_of(const ModeSet& other) const {
    return std::includes(other.indices_.begin(), other.indices_.end(), indices_.begin(),
                         indices_.end());
}

ModeSet ModeSet::complement_in(const ModeSet& other) const {
    std::vector<int> rest;
    std::set_difference(other.indices_.begin(), other.indices_.end(), indices_.begin(),
                        indices_.end(), std::back_inserter(rest));
    return ModeSet(std::move(rest));
}

std::string ModeSet::to_string() const {
    std::string s;
    for (std::size_t i = 0; i < indices_.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(indices_[i] + 1);
    }
    return s;
}

int DimensionTree::add_node(const TreeSpecNode& spec, int parent) {
    ModeSet ms{spec.modes};
    int id = static_cast<int>(nodes_.size());
    nodes_.push_back(ms);
    children_.emplace_back();
    parent_.push_back(parent);

    if (ms.size() == 1) {
        if (!spec.children.empty())
            throw TreeError(TreeError::Kind::NonSingletonLeaf,
                            "singleton node {" + ms.to_string() + "} must not have children");
        leaf_of_mode_[ms.min_index()] = id;
        return id;
    }
    if (spec.children.size() == 1)
        throw TreeError(TreeError::Kind::SingleChild,
                        "internal node {" + ms.to_string() + "} has a single child");
    if (spec.children.empty())
        throw TreeError(TreeError::Kind::NonSingletonLeaf,
                        "non-singleton node {" + ms.to_string() + "} must have children");

    // children must partition the parent disjointly
    std::vector<int> merged;
    for (const auto& c : spec.children) {
        ModeSet cms{c.modes};
        if (!cms.is_subset_of(ms))
            throw TreeError(TreeError::Kind::NonPartitionChildren,
                            "child {" + cms.to_string() + "} is not a subset of {" +
                                ms.to_string() + "}");
        merged.insert(merged.end(), cms.indices().begin(), cms.indices().end());
    }
    std::sort(merged.begin(), merged.end());
    if (std::adjacent_find(merged.begin(), merged.end()) != merged.end())
        throw TreeError(TreeError::Kind::NonPartitionChildren,
                        "children of {" + ms.to_string() + "} overlap");
    if (merged != ms.indices())
        throw TreeError(TreeError::Kind::NonPartitionChildren,
                        "children of {" + ms.to_string() + "} do not cover it");

    // canonical order by smallest contained index
    std::vector<const TreeSpecNode*> ordered;
    for (const auto& c : spec.children) ordered.push_back(&c);
    std::sort(ordered.begin(), ordered.end(), [](const TreeSpecNode* a, const TreeSpecNode* b) {
        return *std::min_element(a->modes.begin(), a->modes.end()) <
               *std::min_element(b->modes.begin(), b->modes.end());
    });
    for (const TreeSpecNode* c : ordered) {
        const int child_id = add_node(*c, id);  // may reallocate children_
        children_[id].push_back(child_id);
    }
    return id;
}

DimensionTree DimensionTree::validate(const TreeSpecNode& candidate, int d) {
    if (d < 1) throw TreeError(TreeError::Kind::RootMismatch, "mode count must be positive");
    DimensionTree t;
    t.d_ = d;
    t.leaf_of_mode_.assign(d, -1);
    if (ModeSet{candidate.modes} != ModeSet::range(d))
        throw TreeError(TreeError::Kind::RootMismatch,
                        "root must equal {1,...," + std::to_string(d) + "}");
    t.add_node(candidate, -1);
    for (int j = 0; j < d; ++j)
        if (t.leaf_of_mode_[j] < 0)
            throw TreeError(TreeError::Kind::NonPartitionChildren,
                            "mode " + std::to_string(j + 1) + " has no leaf");
    return t;
}

namespace {

TreeSpecNode tucker_spec(int d) {
    TreeSpecNode root;
    for (int j = 0; j < d; ++j) root.modes.push_back(j);
    for (int j = 0; j < d; ++j) root.children.push_back({{j}, {}});
    return root;
}

TreeSpecNode tt_spec(int from, int d) {
    TreeSpecNode node;
    for (int j = from; j < d; ++j) node.modes.push_back(j);
    if (from == d - 1) return node;
    node.children.push_back({{from}, {}});
    node.children.push_back(tt_spec(from + 1, d));
    return node;
}

TreeSpecNode balanced_spec(int from, int to) {
    TreeSpecNode node;
    for (int j = from; j < to; ++j) node.modes.push_back(j);
    if (to - from == 1) return node;
    int mid = from + (to - from + 1) / 2;
    node.children.push_back(balanced_spec(from, mid));
    node.children.push_back(balanced_spec(mid, to));
    return node;
}

}  // namespace

DimensionTree DimensionTree::standard(TreeKind kind, int d) {
    if (d < 2) throw TreeError(TreeError::Kind::RootMismatch, "standard trees require d >= 2");
    switch (kind) {
        case TreeKind::Tucker: return validate(tucker_spec(d), d);
        case TreeKind::TT: return validate(tt_spec(0, d), d);
        case TreeKind::Balanced: return validate(balanced_spec(0, d), d);
    }
    throw TreeError(TreeError::Kind::Parse, "unknown tree kind");
}

std::vector<int> DimensionTree::leaf_ids() const {
    return leaf_of_mode_;
}

std::vector<int> DimensionTree::internal_ids() const {
    std::vector<int> out;
    for (int id : preorder())
        if (!is_leaf(id)) out.push_back(id);
    return out;
}

std::vector<int> DimensionTree::preorder() const {
    std::vector<int> out, stack{0};
    while (!stack.empty()) {
        int id = stack.back();
        stack.pop_back();
        out.push_back(id);
        for (auto it = children_[id].rbegin(); it != children_[id].rend(); ++it)
            stack.push_back(*it);
    }
    return out;
}

int DimensionTree::find(const ModeSet& modes) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i] == modes) return static_cast<int>(i);
    return -1;
}

bool DimensionTree::operator==(const DimensionTree& o) const {
    return d_ == o.d_ && nodes_ == o.nodes_ && children_ == o.children_;
}

namespace {

void serialize_node(const DimensionTree& t, int id, int depth, std::ostringstream& out) {
    for (int i = 0; i < depth; ++i) out << "  ";
    out << "NODE " << t.node(id).to_string() << " CHILDREN " << t.children(id).size() << "\n";
    for (int c : t.children(id)) serialize_node(t, c, depth + 1, out);
}

struct LineReader {
    std::istream& in;
    int line_no = 0;

    // returns false at end of input; skips blank lines
    bool next(std::string& line) {
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
        }
        return false;
    }
};

TreeSpecNode parse_node(LineReader& reader) {
    std::string line;
    if (!reader.next(line))
        throw TreeError(TreeError::Kind::Parse,
                        "line " + std::to_string(reader.line_no) + ": unexpected end of input");
    std::istringstream ls(line);
    std::string kw, idx_list, ckw;
    std::size_t k = 0;
    if (!(ls >> kw >> idx_list >> ckw >> k) || kw != "NODE" || ckw != "CHILDREN")
        throw TreeError(TreeError::Kind::Parse, "line " + std::to_string(reader.line_no) +
                                                    ": expected 'NODE <indices> CHILDREN <k>'");
    TreeSpecNode node;
    std::istringstream is(idx_list);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        try {
            node.modes.push_back(std::stoi(tok) - 1);
        } catch (const std::exception&) {
            throw TreeError(TreeError::Kind::Parse, "line " + std::to_string(reader.line_no) +
                                                        ": bad mode index '" + tok + "'");
        }
    }
    if (node.modes.empty())
        throw TreeError(TreeError::Kind::Parse,
                        "line " + std::to_string(reader.line_no) + ": empty mode list");
    for (std::size_t i = 0; i < k; ++i) node.children.push_back(parse_node(reader));
    return node;
}

}  // namespace

std::string DimensionTree::serialize() const {
    std::ostringstream out;
    serialize_node(*this, 0, 0, out);
    return out.str();
}

DimensionTree DimensionTree::parse(std::istream& in) {
    LineReader reader{in};
    TreeSpecNode root = parse_node(reader);
    int d = static_cast<int>(root.modes.size());
    return validate(root, d);
}

DimensionTree DimensionTree::parse(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
}

}  // namespace ttb
