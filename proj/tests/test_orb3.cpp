#include "orbiflow/orb3.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace orbiflow;

namespace {

const char* kTwoThetas =
    "orb3 S3 S3\n"
    "edge 0 2 0-1\nedge 1 3 0-1\nedge 2 5 0-1\n"
    "edge 3 2 2-3\nedge 4 3 2-3\nedge 5 5 2-3\n"
    "vertex 0 0 1 2\nvertex 1 0 1 2\nvertex 2 3 4 5 @1\nvertex 3 3 4 5 @1\n"
    "site a vertex 1\nsite b vertex 2\n";

bool multiset_includes(const std::vector<int>& big, const std::vector<int>& small) {
    return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

}  // namespace

TEST(Orb3, VertexConditionExamples) {
    EXPECT_TRUE(validate_vertex(2, 2, 7));
    EXPECT_TRUE(validate_vertex(2, 3, 5));
    EXPECT_FALSE(validate_vertex(2, 3, 6));
    EXPECT_FALSE(validate_vertex(3, 3, 3));
    EXPECT_THROW(validate_vertex(1, 3, 3), InvariantError);
}

TEST(Orb3, VertexConditionMatchesIntegerSign) {
    for (int p = 2; p <= 50; ++p)
        for (int q = 2; q <= 50; ++q)
            for (int r = 2; r <= 50; ++r) {
                long long lhs = static_cast<long long>(q) * r + static_cast<long long>(p) * r + static_cast<long long>(p) * q;
                ASSERT_EQ(validate_vertex(p, q, r), lhs > static_cast<long long>(p) * q * r) << p << "," << q << "," << r;
            }
}

TEST(Orb3, VertexLinks) {
    EXPECT_EQ(vertex_link(2, 3, 4), sphere({2, 3, 4}));
    EXPECT_EQ(vertex_link(2, 2, 2), sphere({2, 2, 2}));
    EXPECT_THROW(vertex_link(2, 3, 6), InvariantError);
    for (int k = 2; k <= 30; ++k) EXPECT_EQ(classify_geometry(vertex_link(2, 2, k)), GeometryClass::Spherical);
}

TEST(Orb3, DiscalFill) {
    EXPECT_EQ(discal_fill(sphere({4, 4})).name(), "D3(4,4)");
    EXPECT_EQ(discal_fill(sphere()).name(), "D3");
    EXPECT_EQ(discal_fill(sphere({2, 3, 5})).name(), "D3(2,3,5)");
    EXPECT_THROW(discal_fill(sphere({2, 3, 6})), InvariantError);
    EXPECT_THROW(discal_fill(sphere({2, 3})), InvariantError);
}

TEST(Orb3, DiscalFillInvertsBoundary) {
    std::vector<DiscalToken> all{{{}}, {{2, 3, 3}}, {{2, 3, 4}}, {{2, 3, 5}}};
    for (int k = 2; k <= 12; ++k) {
        all.push_back({{k, k}});
        all.push_back({{2, 2, k}});
    }
    for (const auto& t : all) EXPECT_EQ(discal_fill(t.boundary()), t) << t.name();
}

TEST(Orb3, SolidToricTokens) {
    EXPECT_EQ((SolidToricToken{false, 1}).name(), "S1xD2");
    EXPECT_EQ((SolidToricToken{false, 3}).name(), "S1xD2(3)");
    EXPECT_EQ((SolidToricToken{true, 4}).name(), "S1xZ2D2(4)");
    EXPECT_EQ((SolidToricToken{true, 4}).boundary(), sphere({2, 2, 2, 2}));
    EXPECT_EQ(classify_geometry((SolidToricToken{false, 2}).boundary()), GeometryClass::Euclidean);
}

TEST(Orb3, ParseRejectsVertexConditionViolation) {
    const char* t = "orb3 S3\nedge 0 3 0-1\nedge 1 3 0-1\nedge 2 3 0-1\nvertex 0 0 1 2\nvertex 1 0 1 2\n";
    EXPECT_THROW(parse_orb3(t), InvariantError);
}

TEST(Orb3, ParseErrorsCarryLineNumbers) {
    try {
        parse_orb3("orb3 S3\nedge 0 1 circle\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line, 2);
    }
    EXPECT_THROW(parse_orb3("edge 0 2 circle\n"), ParseError);
    EXPECT_THROW(parse_orb3("orb3 S3\nbogus\n"), ParseError);
}

TEST(Orb3, StructuralInvariants) {
    EXPECT_THROW(parse_orb3("orb3 S3\nedge 0 2 0-1\nvertex 0 0 0 0\nvertex 1 0 0 0\n"), InvariantError);
    EXPECT_THROW(parse_orb3("orb3 S3\nedge 0 2 circle\nedge 0 3 circle\n"), InvariantError);
    EXPECT_THROW(parse_orb3("orb3 S3\nboundary D2//Z2\n"), InvariantError);
    EXPECT_NO_THROW(parse_orb3("orb3 S3\nedge 0 2 0-0\nedge 1 3 0-1\nedge 2 2 1-1\nvertex 0 0 0 1\nvertex 1 1 2 2\n"));
}

TEST(Orb3, TextRoundTrip) {
    const char* texts[] = {kTwoThetas, "orb3 S1xS2\nedge 0 3 circle\n", "orb3 T3#S1xS2 S3\nboundary T2\nsite x point @1\n",
                           "orb3 S3\nedge 0 4 circle\nsite a edge 0 1\nsite b edge 0 2\n"};
    for (const char* t : texts) {
        auto d = parse_orb3(t);
        EXPECT_EQ(print_orb3(d), t);
        EXPECT_EQ(parse_orb3(print_orb3(d)), d);
    }
}

TEST(Orb3, EdgeLabelMultiset) {
    EXPECT_TRUE(edge_label_multiset(parse_orb3("orb3 S3\n")).empty());
    auto theta = parse_orb3("orb3 S3\nedge 0 2 0-1\nedge 1 2 0-1\nedge 2 5 0-1\nvertex 0 0 1 2\nvertex 1 0 1 2\n");
    EXPECT_EQ(edge_label_multiset(theta), (std::vector<int>{2, 2, 5}));
    EXPECT_EQ(edge_label_set(theta), (std::set<int>{2, 5}));
}

TEST(Orb3, ConnectedSumOfTwoComponents) {
    auto d = parse_orb3("orb3 S3 S1xS2\nsite a point @0\nsite b point @1\n");
    auto [out, rec] = zero_surgery(d, "a", "b");
    EXPECT_EQ(out.components.size(), 1u);
    EXPECT_EQ(out.components[0], "S1xS2");
    EXPECT_EQ(rec.gamma, sphere());
    EXPECT_EQ(undo_surgery(out, rec), d);
}

TEST(Orb3, SurgeryOnOneComponentAddsHandle) {
    auto d = parse_orb3("orb3 S3\nedge 0 3 circle\nsite a edge 0 1\nsite b edge 0 2\n");
    auto [out, rec] = zero_surgery(d, "a", "b");
    EXPECT_EQ(out.components, (std::vector<std::string>{"S1xS2"}));
    EXPECT_EQ(rec.gamma, sphere({3, 3}));
    EXPECT_EQ(edge_label_multiset(out), edge_label_multiset(d));
    EXPECT_EQ(undo_surgery(out, rec), d);
}

TEST(Orb3, JoiningSingularCirclesKeepsLabelSet) {
    auto d = parse_orb3("orb3 S3 S3\nedge 0 3 circle\nedge 1 3 circle @1\nsite a edge 0\nsite b edge 1\n");
    auto [out, rec] = zero_surgery(d, "a", "b");
    EXPECT_EQ(edge_label_set(out), edge_label_set(d));
    EXPECT_TRUE(multiset_includes(edge_label_multiset(d), edge_label_multiset(out)));
    EXPECT_EQ(undo_surgery(out, rec), d);
}

TEST(Orb3, VertexSitesJoinThetaGraphs) {
    auto d = parse_orb3(kTwoThetas);
    auto [out, rec] = zero_surgery(d, "a", "b");
    EXPECT_EQ(rec.gamma, sphere({2, 3, 5}));
    EXPECT_EQ(out.components.size(), 1u);
    EXPECT_EQ(out.vertices.size(), 2u);
    EXPECT_EQ(edge_label_set(out), edge_label_set(d));
    EXPECT_TRUE(multiset_includes(edge_label_multiset(d), edge_label_multiset(out)));
    EXPECT_EQ(undo_surgery(out, rec), d);
}

TEST(Orb3, SurgeryPreconditions) {
    auto d = parse_orb3("orb3 S3 S3\nedge 0 3 circle\nedge 1 4 circle @1\nsite a edge 0\nsite b edge 1\nsite c point @0\n"
                        "site e edge 0\n");
    EXPECT_THROW(zero_surgery(d, "a", "b"), InvariantError);  // S2(3,3) vs S2(4,4)
    EXPECT_THROW(zero_surgery(d, "a", "c"), InvariantError);
    EXPECT_THROW(zero_surgery(d, "a", "a"), InvariantError);
    EXPECT_THROW(zero_surgery(d, "a", "e"), InvariantError);  // same point of the same edge
    EXPECT_THROW(zero_surgery(d, "a", "zz"), InvariantError);
}

// Every surgery result satisfies the checked-constructor invariants and inverts exactly.
TEST(Orb3, SurgeryRoundTripOverLabelledCircles) {
    for (int k = 2; k <= 9; ++k)
        for (int split = 0; split < 2; ++split) {
            std::string t = "orb3 S3" + std::string(split ? " S3" : "") + "\nedge 0 " + std::to_string(k) + " circle\n";
            t += "edge 1 " + std::to_string(k) + " circle" + (split ? " @1" : "") + "\n";
            t += "edge 2 " + std::to_string(k + 1) + " circle\nsite a edge 0\nsite b edge 1\n";
            auto d = parse_orb3(t);
            auto [out, rec] = zero_surgery(d, "a", "b");
            EXPECT_NO_THROW(validate(out));
            EXPECT_EQ(undo_surgery(out, rec), d) << t;
            EXPECT_EQ(edge_label_set(out), edge_label_set(d));
        }
}
