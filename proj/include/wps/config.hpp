#pragma once

// Experiment configuration: plain-text sections of key = value pairs, or
// the equivalent JSON object. See docs/config.md for the schema.

#include "wps/evaluation.hpp"

#include <map>
#include <string>
#include <vector>

namespace wps::config {

struct ExperimentConfig {
    std::string profile = "desk";
    std::vector<std::size_t> n_values{200, 1000};
    std::vector<double> c_values{1.0, 2.0};
    std::vector<eval::Variant> variants = eval::all_variants();
    std::size_t replications = 100;
    std::uint64_t seed = 20240101;
    std::size_t folds = 10;
    LossFunction loss;
    eval::WSettings w;
    eval::EvaluationMode evaluation_mode = eval::EvaluationMode::InSample;
    std::size_t jobs = 0;
    std::vector<std::string> learners{"forest", "tree", "logistic", "lasso", "nnet2", "nnet3", "nnet5"};
    // Learner name -> hyperparameter overrides.
    std::map<std::string, std::map<std::string, double>> overrides;
    std::string out_dir = "out";

    // Library in `learners` order with overrides applied; validates.
    std::vector<LearnerSpec> library() const;
    eval::ExperimentGrid grid() const;
};

// desk: R = 100, n in {200, 1000}, C in {1, 2}, full library.
// paper: R = 500, n in {200, 500, 1000}, C in {1, 2}, full library.
ExperimentConfig profile(const std::string& name);

// Expands library keywords: "full"/"default" and "reduced".
std::vector<std::string> expand_learners(const std::vector<std::string>& names);

// Keys are applied on top of base.
// Sections [experiment], [weights], [library], [output]. Unknown sections
// or keys, duplicates, and bad values throw io::InputError with the line.
// A `profile` key is applied before every other key regardless of order.
ExperimentConfig parse_config_text(const std::string& text, const ExperimentConfig& base = {});

// Same schema as a JSON object of sections; a run manifest (an object with
// a "config" member) is accepted too.
ExperimentConfig parse_config_json(const std::string& text, const ExperimentConfig& base = {});

// Chooses the parser from the first non-blank character.
ExperimentConfig load_config_file(const std::string& path, const ExperimentConfig& base = {});

// Sets one key as the text format would; used for CLI overrides.
void set_option(ExperimentConfig& cfg, const std::string& section, const std::string& key, const std::string& value);

// JSON text of the config in the same schema parse_config_json reads.
std::string config_to_json(const ExperimentConfig& cfg, int indent = 2);

LossKind parse_loss(const std::string& name);
std::string loss_name(LossKind kind);

} // namespace wps::config
