#include "orbiflow/graphdec.hpp"
#include "orbiflow/io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <set>

using namespace orbiflow;
namespace fs = std::filesystem;

namespace {

std::vector<fs::path> corpus() {
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(fs::path(ORBIFLOW_DATA_DIR) / "graphs"))
        if (e.path().extension() == ".orb") out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

GraphOrb load(const std::string& name) {
    return parse_graph(read_file((fs::path(ORBIFLOW_DATA_DIR) / "graphs" / name).string()));
}

std::set<OpKind> ops_of(const NormalizationResult& r) {
    std::set<OpKind> s;
    for (const auto& t : r.trace) s.insert(t.op);
    return s;
}

const char* kCapGlue = "piece C base D2 fibers\nbdry C.0 T2 slope 0/1\n";

}  // namespace

TEST(GraphCorpus, HasEnoughFiles) { EXPECT_GE(corpus().size(), 25u); }

TEST(GraphCorpus, PrintParseRoundTrip) {
    for (const auto& p : corpus()) {
        auto text = read_file(p.string());
        EXPECT_EQ(print_graph(parse_graph(text)), text) << p;
    }
}

TEST(GraphCorpus, NormalizeIsStrongReconciledAndIdempotent) {
    for (const auto& p : corpus()) {
        auto g = parse_graph(read_file(p.string()));
        auto r = normalize(g);
        EXPECT_TRUE(verify_strong(r.strong).ok) << p;
        EXPECT_TRUE(reconcile(r, static_cast<int>(g.gluings.size()))) << p;
        auto again = normalize(r.strong);
        EXPECT_TRUE(again.trace.empty()) << p;
        EXPECT_EQ(print_graph(again.strong), print_graph(r.strong)) << p;
    }
}

TEST(GraphCorpus, CoversEveryOperation) {
    std::set<OpKind> seen;
    for (const auto& p : corpus())
        for (auto k : ops_of(normalize(parse_graph(read_file(p.string()))))) seen.insert(k);
    for (int k = 0; k <= static_cast<int>(OpKind::QuotientS1xS2); ++k)
        EXPECT_TRUE(seen.count(static_cast<OpKind>(k))) << to_string(static_cast<OpKind>(k));
}

TEST(GraphCorpus, Step5Tokens) {
    auto tokens = [](const char* f) { return normalize(load(f)).recognized; };
    using V = std::vector<std::string>;
    EXPECT_EQ(tokens("step5_case1.orb"), (V{"S1xD2(2)"}));
    EXPECT_EQ(tokens("step5_case2.orb"), (V{"S3//Z5"}));
    EXPECT_EQ(tokens("step5_case3.orb"), (V{"S3//(Z2×Z3)"}));
    EXPECT_EQ(tokens("step5_case4.orb"), (V{"S3//D3"}));
    EXPECT_EQ(tokens("step5_case5.orb"), (V{"(S3//(Z3×Z4))//Z2"}));
    EXPECT_EQ(tokens("step5_case6.orb"), (V{"S3//D3"}));
    EXPECT_EQ(tokens("s1xs2_quotient.orb"), (V{"S1xS2(2,3)"}));
}

TEST(GraphDec, Step5CaseSixLeavesSolidTorusAndSplit) {
    auto r = normalize(load("step5_case6.orb"));
    ASSERT_EQ(r.strong.pieces.size(), 1u);
    EXPECT_TRUE(r.strong.pieces[0].solid_toric());
    EXPECT_EQ(r.strong.pieces[0].solid_toric_order(), 3);
    ASSERT_EQ(r.surgeries.size(), 1u);
    EXPECT_EQ(r.surgeries[0].gamma, sphere({3, 3}));
    EXPECT_EQ(r.surgeries[0].direction, SurgeryRecord::Split);
}

TEST(GraphDec, VerifyStrongExamples) {
    auto ok = parse_graph(
        "piece A base S1xI(2) fibers 2\nbdry A.0 T2 slope 1/0\nbdry A.1 T2 slope 1/0\n"
        "piece B base S1xI(3) fibers 3\nbdry B.0 T2 slope 0/1\nbdry B.1 T2 slope 0/1\n"
        "glue A.0 B.0 isotopic=false\nglue A.1 B.1 isotopic=false\n");
    EXPECT_TRUE(verify_strong(ok).ok);
    auto iso = load("first_op_merge.orb");
    auto v = verify_strong(iso);
    ASSERT_FALSE(v.ok);
    EXPECT_NE(v.violations[0].find("condition (2)"), std::string::npos);
    auto cap = load("step5_case2.orb");
    auto w = verify_strong(cap);
    ASSERT_FALSE(w.ok);
    EXPECT_NE(w.violations[0].find("condition (3)"), std::string::npos);
}

TEST(GraphDec, AlreadyStrongIsFixpoint) {
    auto g = load("already_strong.orb");
    auto r = normalize(g);
    EXPECT_TRUE(r.trace.empty());
    EXPECT_TRUE(r.surgeries.empty());
    EXPECT_TRUE(r.recognized.empty());
    EXPECT_EQ(print_graph(r.strong), print_graph(g));
}

TEST(GraphDec, CapOverDiscIsRemoved) {
    auto r = normalize(load("step5_case2.orb"));
    EXPECT_TRUE(r.strong.pieces.empty());
    EXPECT_EQ(r.recognized, (std::vector<std::string>{"S3//Z5"}));
}

TEST(GraphDec, IsotopicChainMergesToOnePiece) {
    auto g = parse_graph(
        "piece A base D2(2) fibers 2\nbdry A.0 T2 slope 1/0\n"
        "piece B base S1xI(3) fibers 3\nbdry B.0 T2 slope 1/0\nbdry B.1 T2 slope 1/0\n"
        "piece C base D2(7) fibers 7\nbdry C.0 T2 slope 1/0\n"
        "glue A.0 B.0 isotopic=true\nglue B.1 C.0 isotopic=true\n");
    auto r = normalize(g);
    ASSERT_EQ(r.strong.pieces.size(), 1u);
    EXPECT_TRUE(r.strong.gluings.empty());
    EXPECT_EQ(print_base(r.strong.pieces[0]), "S2(2,3,7)");
    EXPECT_EQ(r.trace.size(), 2u);
}

TEST(GraphDec, Op1Merge) {
    auto g = parse_graph(
        "piece A base S1xI fibers\nbdry A.0 T2 slope 1/0\nbdry A.1 T2 slope 1/0\n"
        "piece B base S1xI fibers\nbdry B.0 T2 slope 1/0\nbdry B.1 T2 slope 1/0\nglue A.1 B.0 isotopic=true\n");
    auto m = op1_merge(g, 0);
    ASSERT_EQ(m.pieces.size(), 1u);
    EXPECT_EQ(print_base(m.pieces[0]), "S1xI");
    EXPECT_TRUE(m.gluings.empty());
    auto self = op1_merge(load("first_op_self_gluing.orb"), 0);
    EXPECT_EQ(print_base(self.pieces[0]), "T2(2,3)");
    EXPECT_THROW(op1_merge(load("already_strong.orb"), 0), InvariantError);
    EXPECT_THROW(op1_merge(g, 3), InvariantError);
}

TEST(GraphDec, Op1MergeOnReflectors) {
    auto same = normalize(load("first_op_reflector_same_circle.orb")).strong;
    EXPECT_EQ(same.pieces[0].mirrors(), 2);
    auto two = normalize(load("first_op_reflector_two_circles.orb")).strong;
    EXPECT_EQ(two.pieces[0].mirrors(), 1);
    EXPECT_EQ(two.pieces[0].genus, 1);
    EXPECT_EQ(two.pieces[0].mirror_corners[0], (std::vector<int>{2, 3}));
}

TEST(GraphDec, Op2DehnMerge) {
    std::string annulus = "piece A base S1xI fibers\nbdry A.0 T2 slope 1/0\nbdry A.1 T2 slope 1/0\n";
    auto g3 = parse_graph(annulus + kCapGlue + "glue A.0 C.0 isotopic=false u=3\n");
    auto m = op2_dehn_merge(g3, 0);
    ASSERT_EQ(m.pieces.size(), 1u);
    EXPECT_EQ(print_base(m.pieces[0]), "D2(3)");
    auto g1 = parse_graph(annulus + kCapGlue + "glue A.0 C.0 isotopic=false u=1\n");
    EXPECT_EQ(print_base(op2_dehn_merge(g1, 0).pieces[0]), "D2");
    auto gm = parse_graph(annulus + kCapGlue + "glue A.0 C.0 isotopic=false meridian_fiber=true\n");
    EXPECT_THROW(op2_dehn_merge(gm, 0), InvariantError);
    // order u * r when the core is singular
    EXPECT_EQ(print_base(normalize(load("dehn_merge_singular_core.orb")).strong.pieces[0]), "S2(2,5,6)");
}

TEST(GraphDec, StepCutKinds) {
    auto twice_punctured_torus = parse_graph(std::string("piece U base F1,2 fibers\nbdry U.0 T2 slope 1/0\nbdry U.1 T2 slope 1/0\n") +
                                             kCapGlue + "glue U.0 C.0 isotopic=false meridian_fiber=true\n");
    int before = component_count(twice_punctured_torus);
    auto s1 = step_cut(twice_punctured_torus, 0, StepKind::Separating);
    EXPECT_EQ(component_count(s1.graph), before + 1);
    ASSERT_EQ(s1.surgeries.size(), 1u);
    EXPECT_EQ(s1.surgeries[0].gamma, sphere());
    EXPECT_EQ(s1.surgeries[0].direction, SurgeryRecord::Split);
    EXPECT_EQ(s1.graph.gluings.size(), twice_punctured_torus.gluings.size() + 1);
    EXPECT_THROW(step_cut(twice_punctured_torus, 0, StepKind::Nonseparating), InvariantError);

    auto torus = load("step2_nonseparating.orb");
    auto s2 = step_cut(torus, 0, StepKind::Nonseparating);
    EXPECT_EQ(component_count(s2.graph), component_count(torus));
    EXPECT_EQ(s2.graph.gluings.size(), torus.gluings.size() + 1);
    ASSERT_EQ(s2.surgeries.size(), 1u);
    EXPECT_EQ(s2.surgeries[0].gamma, sphere({3, 3}));

    auto refl = load("step3_reflector_separating.orb");
    auto s3 = step_cut(refl, 0, StepKind::ReflectorSeparating);
    ASSERT_EQ(s3.surgeries.size(), 1u);
    EXPECT_EQ(s3.surgeries[0].gamma, sphere({2, 2, 5}));

    auto s4 = step_cut(load("step4_reflector_nonseparating.orb"), 0, StepKind::ReflectorNonseparating);
    ASSERT_EQ(s4.surgeries.size(), 1u);
    EXPECT_EQ(s4.surgeries[0].gamma, sphere({2, 2, 3}));
}

TEST(GraphDec, Step5Recognize) {
    EXPECT_EQ(*step5_recognize(disc(), 5).token, "S3//Z5");
    EXPECT_EQ(*step5_recognize(disc({3}), 2).token, "S3//(Z2×Z3)");
    EXPECT_EQ(*step5_recognize(disc_reflector(0), 4).token, "S3//D4");
    EXPECT_EQ(*step5_recognize(disc_reflector(3), 2).token, "(S3//(Z2×Z3))//Z2");
    auto ann = step5_recognize(make_sig(0, {}, 2), 3);
    EXPECT_FALSE(ann.token);
    EXPECT_EQ(*ann.residual, "S1xD2(3)");
    auto mixed = step5_recognize_mixed_annulus(4);
    EXPECT_EQ(*mixed.token, "S3//D4");
    EXPECT_EQ(*mixed.residual, "S1xD2(4)");
    EXPECT_THROW(step5_recognize(disc({2, 3}), 2), InvariantError);
    EXPECT_THROW(step5_recognize(make_sig(1, {}, 1), 2), InvariantError);
}

TEST(GraphDec, CompressibleSplit) {
    auto solid = parse_graph("piece S base D2(4) fibers 4\nbdry S.0 T2 slope 1/0\n");
    auto a = compressible_boundary_split(solid, "S.0");
    EXPECT_EQ(a.o0.solid_toric_order(), 4);
    EXPECT_TRUE(a.rest.strong.pieces.empty());

    auto split_case = load("compressible_split.orb");
    auto b = compressible_boundary_split(split_case, "U.1");
    EXPECT_TRUE(b.o0.solid_toric());
    EXPECT_TRUE(b.o0.find("U.1"));
    EXPECT_TRUE(b.rest.strong.pieces.empty());
    EXPECT_EQ(b.rest.surgeries.size(), 2u);
    EXPECT_EQ(b.rest.recognized, (std::vector<std::string>{"S3//Z2", "S3//Z3", "S1xD2"}));

    auto not_solid = parse_graph("piece A base S1xI(2,3) fibers 2 3\nbdry A.0 T2 slope 1/0\nbdry A.1 T2 slope 1/0\n");
    EXPECT_THROW(compressible_boundary_split(not_solid, "A.0"), InvariantError);

    auto two = parse_graph(std::string("piece S base D2(4) fibers 4\nbdry S.0 T2 slope 1/0\n") +
                           "piece A base D2(2,3) fibers 2 3\nbdry A.0 T2 slope 1/0\n"
                           "piece B base D2(2,5) fibers 2 5\nbdry B.0 T2 slope 0/1\nglue A.0 B.0 isotopic=false\n");
    auto c = compressible_boundary_split(two, "S.0");
    EXPECT_EQ(c.o0.solid_toric_order(), 4);
    EXPECT_TRUE(c.rest.strong.pieces.empty());
    EXPECT_THROW(compressible_boundary_split(two, "A.0"), InvariantError);
}

TEST(GraphDec, ValidationRules) {
    // isotopic flag must agree with the slopes
    EXPECT_THROW(parse_graph("piece A base D2(2,3) fibers 2 3\nbdry A.0 T2 slope 1/0\n"
                             "piece B base D2(2,5) fibers 2 5\nbdry B.0 T2 slope 1/0\nglue A.0 B.0 isotopic=false\n"),
                 InvariantError);
    // meridian data only on a solid-toric end
    EXPECT_THROW(parse_graph("piece A base D2(2,3) fibers 2 3\nbdry A.0 T2 slope 1/0\n"
                             "piece B base D2(2,5) fibers 2 5\nbdry B.0 T2 slope 0/1\nglue A.0 B.0 isotopic=false u=2\n"),
                 InvariantError);
    // without meridian data a solid-toric neighbour is left alone
    auto plain = parse_graph(std::string("piece A base D2(2,3) fibers 2 3\nbdry A.0 T2 slope 1/0\n") + kCapGlue +
                             "glue A.0 C.0 isotopic=false\n");
    EXPECT_TRUE(normalize(plain).trace.empty());
    EXPECT_TRUE(verify_strong(plain).ok);
    // T2 cannot meet S2222
    EXPECT_THROW(parse_graph("piece A base D2(2,3) fibers 2 3\nbdry A.0 T2 slope 1/0\n"
                             "piece B base F0,0[1:2,3] fibers\nbdry B.0 S2222 slope 0/1\nglue A.0 B.0 isotopic=false\n"),
                 InvariantError);
    EXPECT_THROW(parse_graph("piece A base D2(2,3) fibers 2 3\nbdry A.0 T2 slope 1/0\nglue A.0 A.0 isotopic=true\n"),
                 InvariantError);
}

TEST(GraphDec, ParseErrors) {
    std::string two = "piece P1 base S1xI fibers\nbdry P1.0 T2 slope 1/0\nbdry P1.1 T2 slope 1/0\n"
                      "piece P2 base S1xI fibers\nbdry P2.0 T2 slope 1/0\nbdry P2.1 T2 slope 1/0\n";
    EXPECT_THROW(parse_graph(two + "glue P1.0 P2.1 isotopic=true u=3\n"), ParseError);
    EXPECT_THROW(parse_graph(two + "glue P1.0 P2.1 u=3\n"), ParseError);
    EXPECT_THROW(parse_graph(two + "glue P1.0 P2.1 isotopic=maybe\n"), ParseError);
    EXPECT_THROW(parse_graph("piece A base D2(2,3) fibers 2\nbdry A.0 T2 slope 1/0\n"), ParseError);
    EXPECT_THROW(parse_graph("piece A base D2 fibers\nbdry A.0 T2 slope 2/4\n"), ParseError);
    EXPECT_THROW(parse_graph("piece A base Q7 fibers\n"), ParseError);
    EXPECT_THROW(parse_graph("piece A base D2 fibers\n"), ParseError);  // missing bdry line
    try {
        parse_graph(two + "glue P1.0 P2.1 isotopic=true u=3\n");
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line, 7);
    }
}

// ---- randomized weak graph orbifolds ----

namespace {

GraphOrb random_graph(std::mt19937& rng, int max_pieces) {
    std::uniform_int_distribution<int> npieces(1, max_pieces);
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    const int n = npieces(rng);
    GraphOrb g;
    struct End {
        std::string name;
        EucKind kind;
        int piece;
    };
    std::vector<End> ends;
    for (int i = 0; i < n; ++i) {
        SeifertPiece p;
        p.id = "P" + std::to_string(i);
        int shape = pick(0, 9);
        if (shape <= 6) {
            p.genus = pick(0, 3) == 0 ? 1 : 0;
            int nc = pick(0, 3);
            for (int c = 0; c < nc; ++c) p.cones.push_back(pick(2, 7));
            int nt = pick(1, 3);
            for (int b = 0; b < nt; ++b) p.bdry.push_back({p.id + "." + std::to_string(b), EucKind::T2, -1, {}});
            if (shape == 6) p.mirror_corners.push_back({pick(2, 5)});
        } else {
            int nm = pick(1, 2);
            int idx = 0;
            if (shape == 9) p.bdry.push_back({p.id + "." + std::to_string(idx++), EucKind::T2, -1, {}});
            for (int m = 0; m < nm; ++m) {
                std::vector<int> corners;
                int ncorn = pick(0, 2);
                for (int c = 0; c < ncorn; ++c) corners.push_back(pick(2, 6));
                p.mirror_corners.push_back(corners);
                int arcs = pick(m == 0 ? 1 : 0, 2);
                for (int a = 0; a < arcs; ++a) p.bdry.push_back({p.id + "." + std::to_string(idx++), EucKind::S2222, m, {}});
            }
        }
        tidy(p);
        for (std::size_t b = 0; b < p.bdry.size(); ++b) {
            p.bdry[b].name = p.id + "." + std::to_string(b);
            ends.push_back({p.bdry[b].name, p.bdry[b].kind, i});
        }
        g.pieces.push_back(p);
    }
    std::shuffle(ends.begin(), ends.end(), rng);
    std::vector<bool> used(ends.size(), false);
    for (std::size_t i = 0; i < ends.size(); ++i) {
        if (used[i] || pick(0, 4) == 0) continue;
        for (std::size_t j = i + 1; j < ends.size(); ++j) {
            if (used[j] || ends[j].kind != ends[i].kind) continue;
            used[i] = used[j] = true;
            const bool st1 = g.pieces[ends[i].piece].solid_toric(), st2 = g.pieces[ends[j].piece].solid_toric();
            Gluing gl{ends[i].name, ends[j].name, !st1 && !st2 && pick(0, 2) == 0, std::nullopt, false};
            if (st1 && !st2) std::swap(gl.end1, gl.end2);
            auto* b1 = g.pieces[g.piece_of(gl.end1)].find(gl.end1);
            auto* b2 = g.pieces[g.piece_of(gl.end2)].find(gl.end2);
            b1->fiber = make_slope(1, 0);
            b2->fiber = gl.isotopic ? make_slope(1, 0) : make_slope(pick(0, 3), 1);
            if (!gl.isotopic && (st1 || st2)) {
                if (pick(0, 1)) gl.meridian_fiber = true;
                else gl.u = pick(1, 4);
            }
            g.gluings.push_back(gl);
            break;
        }
    }
    validate(g);
    return g;
}

}  // namespace

TEST(GraphDecProperty, RandomWeakGraphsNormalize) {
    std::mt19937 rng(20240611);
    int with_ops = 0;
    for (int trial = 0; trial < 400; ++trial) {
        auto g = random_graph(rng, trial < 350 ? 8 : 50);
        NormalizationResult r;
        ASSERT_NO_THROW(r = normalize(g)) << print_graph(g);
        EXPECT_TRUE(verify_strong(r.strong).ok) << print_graph(g);
        EXPECT_TRUE(reconcile(r, static_cast<int>(g.gluings.size()))) << print_graph(g);
        EXPECT_TRUE(normalize(r.strong).trace.empty()) << print_graph(g);
        if (!r.trace.empty()) ++with_ops;
    }
    EXPECT_GT(with_ops, 200);
}

TEST(GraphDecProperty, RandomGraphsRoundTripThroughText) {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        auto g = random_graph(rng, 10);
        auto text = print_graph(g);
        EXPECT_EQ(print_graph(parse_graph(text)), text);
    }
}
