#pragma once

#include <map>
#include <string>

#include "enhance/train_paired.hpp"
#include "enhance/train_unpaired.hpp"

namespace enhance {

// Plain `key = value` files: one pair per line, '#' starts a comment, blank
// lines ignored. Duplicate keys are an error.
using KvMap = std::map<std::string, std::string>;

KvMap parse_kv_file(const std::string& path);
KvMap parse_kv_text(const std::string& text, const std::string& origin = "<config>");

// Overlays the map onto a config. Every key must be recognized; an unknown
// key raises ConfigError naming it. Recognized keys mirror the config fields:
//
// paired:   epochs, batch, branches, branch_dropout, augment, seed,
//           resolution, checkpoint_interval, checkpoint_prefix, history_path,
//           stop_below_loss, lr0, lr_end, lr_step_epochs, lr_end_epoch
// unpaired: seed, resolution, augment, history_path,
//           phase1.{epochs,batch,lr0,lr_hold_epochs,lr_total_epochs,
//                   disc_dropout,alpha,share_weights,gen_dropout},
//           phase2.{enabled,epochs,batch,lr0,lr_hold_epochs,lr_total_epochs,
//                   gen_dropout}
void apply_paired_config(const KvMap& kv, TrainConfig& config);
void apply_unpaired_config(const KvMap& kv, GanConfig& config);

// Strict scalar parsers shared with the CLI (ConfigError on junk).
long config_int(const std::string& key, const std::string& value);
double config_double(const std::string& key, const std::string& value);
bool config_bool(const std::string& key, const std::string& value);

}  // namespace enhance
