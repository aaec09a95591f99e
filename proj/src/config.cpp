#include "usgan/config.hpp"

#include <fstream>

namespace usgan {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

long long to_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw DataError("config: key '" + key + "' needs an integer, got '" + value + "'");
    }
}

double to_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw DataError("config: key '" + key + "' needs a number, got '" + value + "'");
    }
}

bool to_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw DataError("config: key '" + key + "' needs true/false, got '" + value + "'");
}

}  // namespace

const std::vector<std::string>& training_config_keys() {
    static const std::vector<std::string> keys = {
        "epochs_total",   "epochs_constant_lr", "lr_initial",    "batch_size",
        "adam_beta1",     "adam_beta2",         "lambda1",       "lambda2",
        "w_content",      "w_reverb",           "seed",          "image_size",
        "base_filters",   "loss_form",          "checkpoint_every",
        "log_path",       "abort_on_bad_image"};
    return keys;
}

void apply_config_entry(TrainingConfig& cfg, const std::string& key,
                        const std::string& value) {
    if (key == "epochs_total") cfg.epochs_total = static_cast<int>(to_int(key, value));
    else if (key == "epochs_constant_lr") cfg.epochs_constant_lr = static_cast<int>(to_int(key, value));
    else if (key == "lr_initial") cfg.lr_initial = to_double(key, value);
    else if (key == "batch_size") cfg.batch_size = static_cast<int>(to_int(key, value));
    else if (key == "adam_beta1") cfg.adam_beta1 = to_double(key, value);
    else if (key == "adam_beta2") cfg.adam_beta2 = to_double(key, value);
    else if (key == "lambda1") cfg.weights.lambda1 = to_double(key, value);
    else if (key == "lambda2") cfg.weights.lambda2 = to_double(key, value);
    else if (key == "w_content") cfg.weights.w_content = to_double(key, value);
    else if (key == "w_reverb") cfg.weights.w_reverb = to_double(key, value);
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(to_int(key, value));
    else if (key == "image_size") cfg.image_size = static_cast<int>(to_int(key, value));
    else if (key == "base_filters") cfg.base_filters = static_cast<int>(to_int(key, value));
    else if (key == "loss_form") cfg.loss_form = loss_form_from_string(value);
    else if (key == "checkpoint_every") cfg.checkpoint_every = static_cast<int>(to_int(key, value));
    else if (key == "log_path") cfg.log_path = value;
    else if (key == "abort_on_bad_image") cfg.abort_on_bad_image = to_bool(key, value);
    else {
        std::string keys;
        for (const auto& k : training_config_keys()) {
            if (!keys.empty()) keys += ", ";
            keys += k;
        }
        throw DataError("config: unknown key '" + key + "'; valid keys: " + keys);
    }
}

TrainingConfig load_training_config(const std::filesystem::path& path,
                                    TrainingConfig base) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file: " + path.string());
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw DataError("config: line " + std::to_string(line_no) +
                            " is not 'key = value': " + line);
        apply_config_entry(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return base;
}

}  // namespace usgan
