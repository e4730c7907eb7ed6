#include "enhance/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "enhance/errors.hpp"

namespace enhance {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

KvMap parse_kv_text(const std::string& text, const std::string& origin) {
    KvMap kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) +
                              ": expected `key = value`, got: " + line);
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        if (kv.count(key))
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key `" +
                              key + "`");
        kv[key] = value;
    }
    return kv;
}

KvMap parse_kv_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config file " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_kv_text(buf.str(), path);
}

long config_int(const std::string& key, const std::string& value) {
    char* end = nullptr;
    long v = std::strtol(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0')
        throw ConfigError("config key `" + key + "`: not an integer: " + value);
    return v;
}

double config_double(const std::string& key, const std::string& value) {
    char* end = nullptr;
    double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0')
        throw ConfigError("config key `" + key + "`: not a number: " + value);
    return v;
}

bool config_bool(const std::string& key, const std::string& value) {
    std::string v = value;
    std::transform(v.begin(), v.end(), v.begin(), ::tolower);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("config key `" + key + "`: not a boolean: " + value);
}

void apply_paired_config(const KvMap& kv, TrainConfig& config) {
    for (const auto& [key, value] : kv) {
        if (key == "epochs") config.epochs = static_cast<int>(config_int(key, value));
        else if (key == "batch") config.batch = static_cast<int>(config_int(key, value));
        else if (key == "branches") config.branches = static_cast<int>(config_int(key, value));
        else if (key == "branch_dropout") config.branch_dropout = config_double(key, value);
        else if (key == "augment") config.augment = config_bool(key, value);
        else if (key == "seed") config.seed = static_cast<uint64_t>(config_int(key, value));
        else if (key == "resolution") config.resolution = static_cast<int>(config_int(key, value));
        else if (key == "checkpoint_interval")
            config.checkpoint_interval = static_cast<int>(config_int(key, value));
        else if (key == "checkpoint_prefix") config.checkpoint_prefix = value;
        else if (key == "history_path") config.history_path = value;
        else if (key == "stop_below_loss") config.stop_below_loss = config_double(key, value);
        else if (key == "lr0") config.lr.lr0 = config_double(key, value);
        else if (key == "lr_end") config.lr.lr_end = config_double(key, value);
        else if (key == "lr_step_epochs")
            config.lr.step_epochs = static_cast<int>(config_int(key, value));
        else if (key == "lr_end_epoch")
            config.lr.end_epoch = static_cast<int>(config_int(key, value));
        else
            throw ConfigError("unknown paired-training config key `" + key + "`");
    }
}

void apply_unpaired_config(const KvMap& kv, GanConfig& config) {
    for (const auto& [key, value] : kv) {
        if (key == "seed") config.seed = static_cast<uint64_t>(config_int(key, value));
        else if (key == "resolution") config.resolution = static_cast<int>(config_int(key, value));
        else if (key == "augment") config.augment = config_bool(key, value);
        else if (key == "history_path") config.history_path = value;
        else if (key == "phase1.epochs")
            config.phase1.epochs = static_cast<int>(config_int(key, value));
        else if (key == "phase1.batch")
            config.phase1.batch = static_cast<int>(config_int(key, value));
        else if (key == "phase1.lr0") config.phase1.lr.lr0 = config_double(key, value);
        else if (key == "phase1.lr_hold_epochs")
            config.phase1.lr.hold_epochs = static_cast<int>(config_int(key, value));
        else if (key == "phase1.lr_total_epochs")
            config.phase1.lr.total_epochs = static_cast<int>(config_int(key, value));
        else if (key == "phase1.disc_dropout")
            config.phase1.disc_dropout = config_double(key, value);
        else if (key == "phase1.alpha") config.phase1.alpha = config_double(key, value);
        else if (key == "phase1.share_weights")
            config.phase1.share_weights = config_bool(key, value);
        else if (key == "phase1.gen_dropout")
            config.phase1.gen_dropout = config_double(key, value);
        else if (key == "phase2.enabled") config.phase2.enabled = config_bool(key, value);
        else if (key == "phase2.epochs")
            config.phase2.epochs = static_cast<int>(config_int(key, value));
        else if (key == "phase2.batch")
            config.phase2.batch = static_cast<int>(config_int(key, value));
        else if (key == "phase2.lr0") config.phase2.lr.lr0 = config_double(key, value);
        else if (key == "phase2.lr_hold_epochs")
            config.phase2.lr.hold_epochs = static_cast<int>(config_int(key, value));
        else if (key == "phase2.lr_total_epochs")
            config.phase2.lr.total_epochs = static_cast<int>(config_int(key, value));
        else if (key == "phase2.gen_dropout")
            config.phase2.gen_dropout = config_double(key, value);
        else
            throw ConfigError("unknown unpaired-training config key `" + key + "`");
    }
}

}  // namespace enhance
