#include <gtest/gtest.h>

#include <filesystem>

#include "bn2o/json_io.hpp"

using namespace bn2o;

namespace {

Bn2oNetwork sample_net() {
    GeneratorConfig cfg;
    cfg.n_diseases = 7;
    cfg.n_findings = 5;
    cfg.seed = 77;
    return generate_network(cfg);
}

}  // namespace

TEST(NetworkJson, RoundTripIsExact) {
    const auto net = sample_net();
    const auto text = to_json(net).dump();
    EXPECT_EQ(network_from_json(Json::parse(text)), net);
}

TEST(NetworkJson, Validation) {
    auto j = to_json(sample_net());
    j["priors"].push_back(0.1);
    EXPECT_THROW(network_from_json(j), ValidationError);
    j = to_json(sample_net());
    j["coeffs"][0][0] = 2.0;
    EXPECT_THROW(network_from_json(j), ValidationError);
    j = to_json(sample_net());
    j.erase("leaks");
    EXPECT_THROW(network_from_json(j), ValidationError);
    j = to_json(sample_net());
    j["priors"][0] = "x";
    EXPECT_THROW(network_from_json(j), ValidationError);
}

TEST(EvidenceJson, RoundTripAndValidation) {
    const Evidence ev({4, 1}, {2});
    EXPECT_EQ(evidence_from_json(to_json(ev)), ev);
    EXPECT_EQ(evidence_from_json(Json::parse(R"({"positive": [0]})")), Evidence({0}, {}));
    EXPECT_THROW(evidence_from_json(Json::parse(R"({"positive": [-1]})")), ValidationError);
    EXPECT_THROW(evidence_from_json(Json::parse(R"({"positive": 3})")), ValidationError);
    EXPECT_THROW(evidence_from_json(Json::parse(R"({"positive": [1], "negative": [1]})")),
                 ValidationError);
    EXPECT_THROW(evidence_from_json(Json::parse("[1]")), ValidationError);
}

TEST(PolicyJson, RoundTrip) {
    const std::vector<SelectionPolicy> policies{
        DMaxPolicy{3}, LambdaPolicy{0.45},
        ExplicitPolicy{{DiseaseState::from_bitstring("0010"), DiseaseState::from_bitstring("1000")}}};
    for (const auto& p : policies) EXPECT_EQ(policy_from_json(to_json(p)), p);
    EXPECT_THROW(policy_from_json(Json::parse(R"({"kind": "topn"})")), ValidationError);
}

TEST(ModelJson, RoundTripIsLossless) {
    const auto net = sample_net();
    for (const SelectionPolicy& policy : {SelectionPolicy{DMaxPolicy{2}}, SelectionPolicy{LambdaPolicy{0.5}}}) {
        const auto model = build_aggregated_model(net, select_base_states(net, policy));
        const auto text = to_json(model).dump();
        const auto back = model_from_json(Json::parse(text));
        EXPECT_EQ(back.source(), net);
        EXPECT_EQ(back.base().states, model.base().states);
        EXPECT_EQ(back.alpha(), model.alpha());
        EXPECT_EQ(back.aggregate_prior(), model.aggregate_prior());
        EXPECT_EQ(back.aggregate_conditionals(), model.aggregate_conditionals());
        EXPECT_EQ(back.base_priors(), model.base_priors());
        EXPECT_EQ(to_json(back).dump(), text);
        const Evidence ev({0, 3}, {1});
        EXPECT_EQ(aggregated_posteriors(back, ev).per_disease,
                  aggregated_posteriors(model, ev).per_disease);
    }
}

TEST(ModelJson, Validation) {
    const auto net = sample_net();
    const auto model = build_aggregated_model(net, select_base_states(net, DMaxPolicy{1}));
    auto j = to_json(model);
    EXPECT_TRUE(is_model_json(j));
    EXPECT_FALSE(is_model_json(to_json(net)));
    EXPECT_THROW(model_from_json(to_json(net)), ValidationError);

    auto unsorted = j;
    std::swap(unsorted["base_states"][0], unsorted["base_states"][1]);
    EXPECT_THROW(model_from_json(unsorted), ValidationError);

    auto bad_alpha = j;
    bad_alpha["alpha"][0] = 1.5;
    EXPECT_THROW(model_from_json(bad_alpha), ValidationError);

    auto short_alpha = j;
    short_alpha["alpha"].erase(0);
    EXPECT_THROW(model_from_json(short_alpha), ValidationError);

    auto out_of_range = j;
    out_of_range["base_states"].push_back(1u << 7);
    EXPECT_THROW(model_from_json(out_of_range), ValidationError);
}

TEST(GeneratorConfigJson, RoundTripAndDefaults) {
    GeneratorConfig cfg;
    cfg.n_diseases = 18;
    cfg.coeff_source = PoolCoefficients{{0.1, 0.9}};
    cfg.leak_source = FixedValue{0.01};
    cfg.seed = 12345678901234ULL;
    EXPECT_EQ(generator_config_from_json(to_json(cfg)), cfg);
    EXPECT_EQ(generator_config_from_json(Json::object()), GeneratorConfig{});
    const auto cpcs = generator_config_from_json(Json::parse(R"({"coeff_source": {"kind": "cpcs"}})"));
    EXPECT_EQ(std::get<PoolCoefficients>(cpcs.coeff_source).values, synthetic_cpcs_pool());
    EXPECT_THROW(generator_config_from_json(Json::parse(R"({"n_diseases": 0})")), ValidationError);
    EXPECT_THROW(generator_config_from_json(Json::parse(R"({"coeff_source": {"kind": "x"}})")),
                 ValidationError);
}

TEST(SweepConfigJson, RoundTrip) {
    SweepConfig cfg;
    cfg.evidence_mode = EvidenceMode::PositiveUpTo;
    cfg.max_positive = 10;
    cfg.unobserved = UnobservedFindings::Negative;
    cfg.exact_engine = ExactEngine::Quickscore;
    cfg.reductions = {LambdaPolicy{0.3}, DMaxPolicy{4}};
    cfg.budget = SweepBudget::large();
    cfg.threads = 3;
    const auto back = sweep_config_from_json(to_json(cfg));
    EXPECT_EQ(to_json(back), to_json(cfg));
    EXPECT_EQ(back.reductions, cfg.reductions);
    EXPECT_THROW(sweep_config_from_json(Json::parse(R"({"unobserved_findings": "maybe"})")),
                 ValidationError);
}

TEST(Files, AtomicWriteAndRead) {
    const auto dir = std::filesystem::temp_directory_path() / "bn2o_test_io";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    const auto path = dir / "net.json";
    write_json_file(path, to_json(sample_net()));
    EXPECT_FALSE(std::filesystem::exists(dir / "net.json.tmp"));
    EXPECT_EQ(network_from_json(read_json_file(path)), sample_net());
    EXPECT_THROW(read_json_file(dir / "missing.json"), ValidationError);
    write_file_atomic(dir / "broken.json", "{not json");
    EXPECT_THROW(read_json_file(dir / "broken.json"), ValidationError);
    EXPECT_THROW(write_file_atomic(dir / "no" / "such" / "dir.json", "{}"), std::runtime_error);
    std::filesystem::remove_all(dir);
}
