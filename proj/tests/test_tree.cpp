#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ttb/tree.hpp"

using namespace ttb;

namespace {

TreeSpecNode leaf(int mode) { return {{mode}, {}}; }

// Fig-style d=6 fixture: root -> {1,2,3},{4,5},{6}; {1,2,3} -> singletons,
// {4,5} -> singletons (modes given 0-based here)
TreeSpecNode mixed_tree() {
    TreeSpecNode a{{0, 1, 2}, {leaf(0), leaf(1), leaf(2)}};
    TreeSpecNode b{{3, 4}, {leaf(3), leaf(4)}};
    return TreeSpecNode{{0, 1, 2, 3, 4, 5}, {a, b, leaf(5)}};
}

}  // namespace

TEST_CASE("star tree over six modes is valid") {
    TreeSpecNode root{{0, 1, 2, 3, 4, 5}, {}};
    for (int j = 0; j < 6; ++j) root.children.push_back(leaf(j));
    DimensionTree t = DimensionTree::validate(root, 6);
    CHECK(t.node_count() == 7);
    CHECK(t.children(t.root()).size() == 6);
    for (int id : t.leaf_ids()) CHECK(t.is_leaf(id));
}

TEST_CASE("non-binary mixed tree is valid") {
    DimensionTree t = DimensionTree::validate(mixed_tree(), 6);
    CHECK(t.node_count() == 9);
    CHECK(t.find(ModeSet({0, 1, 2})) >= 0);
    CHECK(t.find(ModeSet({3, 4})) >= 0);
    CHECK(t.find(ModeSet({5})) >= 0);
    CHECK(t.find(ModeSet({0, 1})) == -1);
}

TEST_CASE("validation rejections carry the right kind") {
    // single child
    CHECK_THROWS_AS(DimensionTree::validate(
                        TreeSpecNode{{0, 1}, {TreeSpecNode{{0, 1}, {leaf(0), leaf(1)}}}}, 2),
                    TreeError);
    try {
        DimensionTree::validate(TreeSpecNode{{0, 1}, {TreeSpecNode{{0}, {}}}}, 2);
        FAIL("expected TreeError");
    } catch (const TreeError& e) {
        CHECK(e.kind() == TreeError::Kind::SingleChild);
    }
    // root does not cover all modes
    try {
        DimensionTree::validate(TreeSpecNode{{0, 1}, {leaf(0), leaf(1)}}, 3);
        FAIL("expected TreeError");
    } catch (const TreeError& e) {
        CHECK(e.kind() == TreeError::Kind::RootMismatch);
    }
    // children overlap
    try {
        DimensionTree::validate(
            TreeSpecNode{{0, 1, 2}, {TreeSpecNode{{0, 1}, {leaf(0), leaf(1)}},
                                     TreeSpecNode{{1, 2}, {leaf(1), leaf(2)}}}},
            3);
        FAIL("expected TreeError");
    } catch (const TreeError& e) {
        CHECK(e.kind() == TreeError::Kind::NonPartitionChildren);
    }
    // children do not cover
    try {
        DimensionTree::validate(TreeSpecNode{{0, 1, 2}, {leaf(0), leaf(1)}}, 3);
        FAIL("expected TreeError");
    } catch (const TreeError& e) {
        CHECK(e.kind() == TreeError::Kind::NonPartitionChildren);
    }
    // singleton with children
    try {
        DimensionTree::validate(TreeSpecNode{{0}, {leaf(0)}}, 1);
        FAIL("expected TreeError");
    } catch (const TreeError& e) {
        CHECK(e.kind() == TreeError::Kind::NonSingletonLeaf);
    }
}

TEST_CASE("standard trees have the documented shapes") {
    DimensionTree tucker = DimensionTree::standard(TreeKind::Tucker, 4);
    CHECK(tucker.node_count() == 5);
    CHECK(tucker.children(0).size() == 4);

    DimensionTree tt = DimensionTree::standard(TreeKind::TT, 4);
    CHECK(tt.node_count() == 7);
    CHECK(tt.find(ModeSet({1, 2, 3})) >= 0);
    CHECK(tt.find(ModeSet({2, 3})) >= 0);
    CHECK(tt.children(0).size() == 2);

    DimensionTree bal = DimensionTree::standard(TreeKind::Balanced, 4);
    CHECK(bal.find(ModeSet({0, 1})) >= 0);
    CHECK(bal.find(ModeSet({2, 3})) >= 0);

    CHECK_THROWS_AS(DimensionTree::standard(TreeKind::TT, 1), TreeError);
}

TEST_CASE("children are ordered canonically by smallest mode") {
    TreeSpecNode root{{0, 1, 2}, {TreeSpecNode{{1, 2}, {leaf(1), leaf(2)}}, leaf(0)}};
    DimensionTree t = DimensionTree::validate(root, 3);
    const auto& kids = t.children(0);
    CHECK(t.node(kids[0]) == ModeSet({0}));
    CHECK(t.node(kids[1]) == ModeSet({1, 2}));
}

TEST_CASE("serialize/parse round trip") {
    for (DimensionTree t : {DimensionTree::validate(mixed_tree(), 6),
                            DimensionTree::standard(TreeKind::TT, 5),
                            DimensionTree::standard(TreeKind::Tucker, 6),
                            DimensionTree::standard(TreeKind::Balanced, 6)}) {
        DimensionTree back = DimensionTree::parse(t.serialize());
        CHECK(back == t);
    }
}

TEST_CASE("parser diagnostics include line numbers") {
    try {
        DimensionTree::parse("NODE 1,2 CHILDREN 2\n  NODE 1 CHILDREN 0\n  FOO\n");
        FAIL("expected TreeError");
    } catch (const TreeError& e) {
        CHECK(e.kind() == TreeError::Kind::Parse);
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    CHECK_THROWS_AS(DimensionTree::parse("NODE 1,2 CHILDREN 2\n  NODE 1 CHILDREN 0\n"),
                    TreeError);
}

TEST_CASE("accessors: parent, preorder, modes are 1-based in text") {
    DimensionTree t = DimensionTree::standard(TreeKind::TT, 3);
    CHECK(t.parent(t.root()) == -1);
    for (int id = 1; id < static_cast<int>(t.node_count()); ++id)
        CHECK(t.node(id).is_subset_of(t.node(t.parent(id))));
    CHECK(t.preorder().front() == t.root());
    CHECK(t.node(0).to_string() == "1,2,3");
    CHECK(t.serialize().substr(0, 10) == "NODE 1,2,3");
}
