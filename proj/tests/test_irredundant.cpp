#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <optional>
#include <set>

#include "ipkit/ipkit.hpp"
#include "scenes.hpp"

using namespace ipkit;

namespace {

InterestPointSet points_at(std::vector<Point> locs, int w = 100, int h = 100) {
    std::vector<InterestPoint> pts;
    double resp = 1.0;
    for (Point p : locs) pts.push_back({p, resp += 0.25, 1.0});
    return make_point_set(pts, w, h);
}

DetectionErrorMap error_map(std::vector<std::optional<double>> errors) {
    DetectionErrorMap m;
    m.errors = std::move(errors);
    m.transform_id = "test";
    return m;
}

/// Random source/target pair plus the exact error map for a random
/// similarity transform.
struct RandomInstance {
    InterestPointSet src;
    InterestPointSet dst;
    Transform t;
    DetectionErrorMap errors;
};

RandomInstance random_instance(Rng& rng, std::size_t n_src, std::size_t n_dst) {
    RandomInstance inst;
    inst.src = points_at({});
    inst.dst = points_at({});
    for (std::size_t i = 0; i < n_src; ++i)
        inst.src.points.push_back({{rng.uniform(0.0, 99.0), rng.uniform(0.0, 99.0)}, 1.0, 1.0});
    for (std::size_t j = 0; j < n_dst; ++j)
        inst.dst.points.push_back({{rng.uniform(0.0, 99.0), rng.uniform(0.0, 99.0)}, 1.0, 1.0});
    inst.t = similarity_transform(rng.uniform(0.9, 1.1), rng.uniform(-0.2, 0.2),
                                  rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0));
    inst.errors = detection_error(inst.src, inst.dst, inst.t);
    return inst;
}

std::multiset<std::pair<double, double>> locations(const InterestPointSet& s) {
    std::multiset<std::pair<double, double>> out;
    for (const auto& p : s.points) out.insert({p.location.x, p.location.y});
    return out;
}

} // namespace

TEST_CASE("pruning removes exactly the points whose error exceeds the threshold") {
    InterestPointSet src = points_at({{10.0, 10.0}, {20.0, 20.0}, {30.0, 30.0}});
    PruneResult r = prune(src, error_map({0.5, 2.0, 0.3}), 1.0);
    REQUIRE(r.retained.size() == 2);
    REQUIRE(r.retained_errors == std::vector<double>{0.5, 0.3});
    REQUIRE(r.removed.size() == 1);
    REQUIRE(r.removed[0].error == 2.0);
    REQUIRE_FALSE(r.removed[0].off_domain);
    REQUIRE(r.removed[0].point.location.x == 20.0);
    REQUIRE(r.achieved_correctness == 0.5);
    REQUIRE(r.delta_d == 1.0);
    // Set metadata travels with the retained subset.
    REQUIRE(r.retained.detector_id == src.detector_id);
    REQUIRE(r.retained.domain_width == src.domain_width);
}

TEST_CASE("a point exactly at the threshold is kept") {
    InterestPointSet src = points_at({{10.0, 10.0}, {20.0, 20.0}});
    PruneResult r = prune(src, error_map({1.0, 1.0000001}), 1.0);
    REQUIRE(r.retained.size() == 1);
    REQUIRE(r.retained_errors[0] == 1.0);
    REQUIRE(r.removed.size() == 1);
    REQUIRE(r.achieved_correctness == 1.0);
}

TEST_CASE("off-domain points are removed and flagged") {
    InterestPointSet src = points_at({{10.0, 10.0}, {20.0, 20.0}});
    PruneResult r = prune(src, error_map({std::nullopt, 0.2}), 1.0);
    REQUIRE(r.retained.size() == 1);
    REQUIRE(r.removed.size() == 1);
    REQUIRE(r.removed[0].off_domain);
    REQUIRE_FALSE(r.removed[0].error.has_value());
}

TEST_CASE("removing everything yields zero achieved correctness") {
    InterestPointSet src = points_at({{10.0, 10.0}, {20.0, 20.0}});
    PruneResult r = prune(src, error_map({5.0, std::nullopt}), 1.0);
    REQUIRE(r.retained.empty());
    REQUIRE(r.removed.size() == 2);
    REQUIRE(r.achieved_correctness == 0.0);
    REQUIRE(verify_embedding(src, r));
}

TEST_CASE("prune validation") {
    InterestPointSet src = points_at({{10.0, 10.0}});
    REQUIRE_THROWS_AS(prune(src, error_map({0.5}), -0.5), parameter_error);
    REQUIRE_THROWS_AS(prune(src, error_map({0.5, 0.6}), 1.0), consistency_error);
}

TEST_CASE("achieved correctness never exceeds the threshold") {
    Rng rng(31337);
    for (int trial = 0; trial < 100; ++trial) {
        RandomInstance inst = random_instance(rng, rng.integer(1, 80), rng.integer(1, 40));
        const double delta = rng.uniform(0.0, 20.0);
        PruneResult r = prune(inst.src, inst.errors, delta);
        REQUIRE(r.achieved_correctness <= delta);
        REQUIRE(verify_embedding(inst.src, r));
        // Retained + removed partition the source.
        REQUIRE(r.retained.size() + r.removed.size() == inst.src.size());
    }
}

TEST_CASE("an audit catches tampered prune results") {
    InterestPointSet src = points_at({{10.0, 10.0}, {20.0, 20.0}, {30.0, 30.0}});
    PruneResult good = prune(src, error_map({0.5, 2.0, 0.3}), 1.0);
    REQUIRE(verify_embedding(src, good));

    PruneResult dropped = good;
    dropped.removed.clear(); // lost a point
    REQUIRE_FALSE(verify_embedding(src, dropped));

    PruneResult moved = good;
    moved.retained.points[0].location.x += 0.5; // not the original point
    REQUIRE_FALSE(verify_embedding(src, moved));

    PruneResult hidden = good;
    hidden.retained.points.push_back(good.removed[0].point); // kept a bad point
    hidden.retained_errors.push_back(*good.removed[0].error);
    hidden.removed.clear();
    REQUIRE_FALSE(verify_embedding(src, hidden));

    PruneResult wrong_level = good;
    wrong_level.achieved_correctness = 0.01;
    REQUIRE_FALSE(verify_embedding(src, wrong_level));

    PruneResult relabeled = good;
    relabeled.removed[0].off_domain = true;
    relabeled.removed[0].error = std::nullopt;
    // Still a partition and formally consistent, so this one passes: the
    // audit cannot recompute errors without the transform context.
    REQUIRE(verify_embedding(src, relabeled));
}

TEST_CASE("pruning twice changes nothing") {
    Rng rng(246);
    for (int trial = 0; trial < 30; ++trial) {
        RandomInstance inst = random_instance(rng, 50, 25);
        const double delta = rng.uniform(0.5, 10.0);
        PruneResult first = prune(inst.src, inst.errors, delta);

        DetectionErrorMap retained_errors;
        retained_errors.transform_id = inst.errors.transform_id;
        for (double e : first.retained_errors) retained_errors.errors.push_back(e);
        PruneResult second = prune(first.retained, retained_errors, delta);
        REQUIRE(second.removed.empty());
        REQUIRE(locations(second.retained) == locations(first.retained));
        REQUIRE(second.achieved_correctness == first.achieved_correctness);
    }
}

TEST_CASE("a larger threshold retains a superset") {
    Rng rng(777);
    RandomInstance inst = random_instance(rng, 120, 40);
    std::size_t prev = 0;
    for (double delta : {0.25, 1.0, 4.0, 16.0, 64.0}) {
        PruneResult r = prune(inst.src, inst.errors, delta);
        REQUIRE(r.retained.size() >= prev);
        prev = r.retained.size();
    }
}

TEST_CASE("batch pruning equals one-point-at-a-time pruning") {
    Rng rng(9001);
    for (int trial = 0; trial < 100; ++trial) {
        RandomInstance inst =
            random_instance(rng, rng.integer(1, 200), rng.integer(1, 60));
        const double delta = rng.uniform(0.0, 15.0);

        PruneResult batch = prune(inst.src, inst.errors, delta);

        // Sequential oracle: repeatedly remove a single offending point.
        // Detection errors depend only on the fixed target set, so they never
        // change between steps.
        std::vector<std::size_t> alive(inst.src.size());
        for (std::size_t i = 0; i < alive.size(); ++i) alive[i] = i;
        bool changed = true;
        while (changed) {
            changed = false;
            for (std::size_t k = 0; k < alive.size(); ++k) {
                const auto& e = inst.errors.errors[alive[k]];
                if (!e.has_value() || *e > delta) {
                    alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(k));
                    changed = true;
                    break;
                }
            }
        }
        REQUIRE(batch.retained.size() == alive.size());
        for (std::size_t k = 0; k < alive.size(); ++k) {
            REQUIRE(batch.retained.points[k].location.x ==
                    inst.src.points[alive[k]].location.x);
            REQUIRE(batch.retained.points[k].location.y ==
                    inst.src.points[alive[k]].location.y);
        }
    }
}

TEST_CASE("pruning preserves the induced correspondence set") {
    Rng rng(13579);
    for (int trial = 0; trial < 50; ++trial) {
        RandomInstance inst = random_instance(rng, 60, 30);
        const double delta = rng.uniform(0.5, 8.0);
        EquivalenceContext ctx{inst.dst, inst.t, delta};

        PruneResult once = prune(inst.src, inst.errors, delta);
        REQUIRE(verify_equivalence(inst.src, inst.src, ctx));
        REQUIRE(verify_equivalence(inst.src, once.retained, ctx));
        REQUIRE(verify_equivalence(once.retained, inst.src, ctx));
    }
}

TEST_CASE("removing a corresponding point breaks equivalence") {
    InterestPointSet src = points_at({{10.0, 10.0}, {50.0, 50.0}});
    InterestPointSet dst = points_at({{10.2, 10.0}, {50.0, 50.3}});
    EquivalenceContext ctx{dst, identity_transform(), 1.0};

    InterestPointSet truncated = src;
    truncated.points.pop_back(); // drops a point that has a partner
    REQUIRE_FALSE(verify_equivalence(src, truncated, ctx));

    // Dropping a point with no partner is invisible to the relation.
    InterestPointSet with_stray = src;
    with_stray.points.push_back({{90.0, 90.0}, 1.0, 1.0});
    REQUIRE(verify_equivalence(src, with_stray, ctx));
}

TEST_CASE("descriptor-checked equivalence enforces a single descriptor") {
    InterestPointSet a = points_at({{10.0, 10.0}});
    EquivalenceContext ctx{a, identity_transform(), 1.0};
    std::vector<DescriptorVector> njet = {{{1.0, 2.0, 3.0}, "njet:o1:s2"}};
    std::vector<DescriptorVector> patch = {{{1.0}, "patch:r0:raw"}};
    REQUIRE_THROWS_AS(verify_equivalence(a, a, njet, patch, njet, ctx), incompatibility_error);
    REQUIRE(verify_equivalence(a, a, njet, njet, njet, ctx));
}

TEST_CASE("the equivalence laws hold on pruning chains and random triples") {
    Rng rng(2468);
    RandomInstance inst = random_instance(rng, 80, 40);
    const double delta = 3.0;
    EquivalenceContext ctx{inst.dst, inst.t, delta};

    PruneResult once = prune(inst.src, inst.errors, delta);
    DetectionErrorMap em2;
    for (double e : once.retained_errors) em2.errors.push_back(e);
    PruneResult twice = prune(once.retained, em2, delta);

    RelationLawReport chain = check_relation_laws({inst.src, once.retained, twice.retained}, ctx);
    REQUIRE(chain.all_hold());
    REQUIRE(chain.violations.empty());
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) REQUIRE(chain.equivalent[i][j]);

    for (int trial = 0; trial < 10; ++trial) {
        std::array<InterestPointSet, 3> sets;
        for (auto& s : sets) {
            s = points_at({});
            const std::size_t n = rng.integer(1, 40);
            for (std::size_t i = 0; i < n; ++i)
                s.points.push_back({{rng.uniform(0.0, 99.0), rng.uniform(0.0, 99.0)}, 1.0, 1.0});
        }
        RelationLawReport laws = check_relation_laws(sets, ctx);
        // Reflexivity, symmetry, and transitivity hold for arbitrary sets;
        // pairwise equivalence may or may not.
        REQUIRE(laws.all_hold());
    }
}
