#pragma once

#include <string>

#include "rcm/data.hpp"
#include "rcm/encoder.hpp"
#include "rcm/trainer.hpp"

namespace rcm {

// Everything a run needs, parsed from a flat "key = value" file. Unknown keys
// are errors; missing keys keep these defaults.
struct RunConfig {
  int n_examples = 2000;
  SynthConfig synth;

  int d_model = 64;
  int n_layers = 2;
  int n_heads = 2;
  int d_ff = 128;
  int max_seq_len = 48;
  double dropout = 0.0;

  TrainConfig train;

  int max_answer_len = 30;
  int bucket_width = 16;

  // True when the config file set action_space explicitly; the baseline mode
  // warns that it ignores it.
  bool action_space_set = false;

  static RunConfig load(const std::string& path);
  void validate() const;

  // Total vocabulary including specials.
  int total_vocab() const { return synth.vocab_size + kNumSpecials; }
  EncoderConfig encoder_config() const;
};

}  // namespace rcm
