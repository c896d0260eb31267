#include "udf/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "udf/errors.hpp"

namespace udf::config {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

int to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const int out = std::stoi(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': not an integer: '" + v + "'");
    }
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double out = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': not a number: '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "on") return true;
    if (v == "0" || v == "false" || v == "off") return false;
    throw ConfigError("config key '" + key + "': not a boolean: '" + v + "'");
}

}  // namespace

void apply_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    auto& t = cfg.train;
    if (key == "iterations") t.iterations = to_int(key, value);
    else if (key == "step_size") t.step_size = to_double(key, value);
    else if (key == "optimizer") {
        if (value == "adam") t.optimizer = trainer::Optimizer::AdaptiveMoment;
        else if (value == "sgd") t.optimizer = trainer::Optimizer::PlainSgd;
        else throw ConfigError("config key 'optimizer': expected adam or sgd, got '" + value + "'");
    } else if (key == "precision") {
        if (value == "double") t.precision = trainer::Precision::Double;
        else if (value == "single") t.precision = trainer::Precision::Single;
        else throw ConfigError("config key 'precision': expected double or single, got '" + value + "'");
    } else if (key == "seed") t.seed = static_cast<unsigned long long>(std::stoull(value));
    else if (key == "width") t.width = to_int(key, value);
    else if (key == "depth") t.depth = to_int(key, value);
    else if (key == "skip_at") t.skip_at = to_int(key, value);
    else if (key == "enc_freqs") t.enc_freqs = to_int(key, value);
    else if (key == "alpha1") t.weights.alpha1 = to_double(key, value);
    else if (key == "alpha2") t.weights.alpha2 = to_double(key, value);
    else if (key == "alpha3") t.weights.alpha3 = to_double(key, value);
    else if (key == "lambda") t.weights.lambda = to_double(key, value);
    else if (key == "adaptive_weight") t.flags.adaptive_weight = to_bool(key, value);
    else if (key == "detach_pull_location") t.flags.detach_pull_location = to_bool(key, value);
    else if (key == "detach_gamma") t.flags.detach_gamma = to_bool(key, value);
    else if (key == "eps_grad") t.flags.eps_grad = to_double(key, value);
    else if (key == "queries_per_point") t.queries_per_point = to_int(key, value);
    else if (key == "resample_every") t.resample_every = to_int(key, value);
    else if (key == "batch_queries") t.batch_queries = to_int(key, value);
    else if (key == "dist_subsample") t.dist_subsample = to_int(key, value);
    else if (key == "cd_subsample") t.cd_subsample = to_int(key, value);
    else if (key == "sigma_knn") t.sampler_opts.sigma_knn = to_int(key, value);
    else if (key == "uniform_frac") t.sampler_opts.uniform_frac = to_double(key, value);
    else if (key == "uniform_box") t.sampler_opts.uniform_box = to_double(key, value);
    else if (key == "trace_every") t.trace_every = to_int(key, value);
    else if (key == "snapshot_every") t.snapshot_every = to_int(key, value);
    else if (key == "resolution") cfg.mesh.resolution = to_int(key, value);
    else if (key == "activation_threshold") cfg.mesh.activation_threshold = to_double(key, value);
    else if (key == "tau_amb") cfg.mesh.tau_amb = to_double(key, value);
    else if (key == "factor") cfg.upsample.factor = to_int(key, value);
    else if (key == "beta") cfg.upsample.beta = to_double(key, value);
    else if (key == "pull_steps") cfg.upsample.pull_steps = to_int(key, value);
    else if (key == "max_rounds") cfg.upsample.max_rounds = to_int(key, value);
    else if (key == "eval_samples") cfg.eval_samples = to_int(key, value);
    else throw ConfigError("unknown config key '" + key + "'");
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected key=value");
        apply_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

std::map<std::string, std::string> RunConfig::snapshot() const {
    std::map<std::string, std::string> out;
    auto num = [](double v) {
        std::ostringstream s;
        s.precision(17);
        s << v;
        return s.str();
    };
    const auto& t = train;
    out["iterations"] = std::to_string(t.iterations);
    out["step_size"] = num(t.step_size);
    out["optimizer"] = t.optimizer == trainer::Optimizer::AdaptiveMoment ? "adam" : "sgd";
    out["precision"] = t.precision == trainer::Precision::Double ? "double" : "single";
    out["seed"] = std::to_string(t.seed);
    out["width"] = std::to_string(t.width);
    out["depth"] = std::to_string(t.depth);
    out["skip_at"] = std::to_string(t.skip_at);
    out["enc_freqs"] = std::to_string(t.enc_freqs);
    out["alpha1"] = num(t.weights.alpha1);
    out["alpha2"] = num(t.weights.alpha2);
    out["alpha3"] = num(t.weights.alpha3);
    out["lambda"] = num(t.weights.lambda);
    out["adaptive_weight"] = t.flags.adaptive_weight ? "1" : "0";
    out["detach_pull_location"] = t.flags.detach_pull_location ? "1" : "0";
    out["detach_gamma"] = t.flags.detach_gamma ? "1" : "0";
    out["eps_grad"] = num(t.flags.eps_grad);
    out["queries_per_point"] = std::to_string(t.queries_per_point);
    out["resample_every"] = std::to_string(t.resample_every);
    out["batch_queries"] = std::to_string(t.batch_queries);
    out["dist_subsample"] = std::to_string(t.dist_subsample);
    out["cd_subsample"] = std::to_string(t.cd_subsample);
    out["sigma_knn"] = std::to_string(t.sampler_opts.sigma_knn);
    out["uniform_frac"] = num(t.sampler_opts.uniform_frac);
    out["uniform_box"] = num(t.sampler_opts.uniform_box);
    out["trace_every"] = std::to_string(t.trace_every);
    out["snapshot_every"] = std::to_string(t.snapshot_every);
    out["resolution"] = std::to_string(mesh.resolution);
    out["activation_threshold"] = num(mesh.activation_threshold);
    out["tau_amb"] = num(mesh.tau_amb);
    out["factor"] = std::to_string(upsample.factor);
    out["beta"] = num(upsample.beta);
    out["pull_steps"] = std::to_string(upsample.pull_steps);
    out["max_rounds"] = std::to_string(upsample.max_rounds);
    out["eval_samples"] = std::to_string(eval_samples);
    return out;
}

std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::uint64_t hash = 0xcbf29ce484222325ull;
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            hash ^= static_cast<unsigned char>(buf[i]);
            hash *= 0x100000001b3ull;
        }
    }
    return hash;
}

void write_manifest(const std::string& path, const RunManifest& manifest) {
    nlohmann::json j;
    j["command"] = manifest.command;
    j["config"] = manifest.config;
    j["input_hashes"] = manifest.input_hashes;
    j["seed"] = manifest.seed;
    j["tool_version"] = manifest.tool_version;
    j["outputs"] = manifest.outputs;
    j["wall_clock_sec"] = manifest.wall_clock_sec;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump(2) << "\n";
    if (!out) throw IoError("write failed for " + path);
}

}  // namespace udf::config
