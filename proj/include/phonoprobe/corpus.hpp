// Copyright 2026 The phonoprobe Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PHONOPROBE_CORPUS_HPP
#define PHONOPROBE_CORPUS_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "phonoprobe/dsp.hpp"

namespace phonoprobe::corpus {

enum class PhonemeClass { Vowel, Approximant, Nasal, Plosive, Fricative, Affricate };

std::string to_string(PhonemeClass c);
PhonemeClass phoneme_class_from_string(const std::string& s);
constexpr int kNumPhonemeClasses = 6;

struct Partial {
  double freq_hz = 0.0;
  double amp = 0.0;
};

// One phoneme type: either a stack of sinusoidal partials (voiced classes)
// or a noise band (fricatives, affricates, plosive bursts), plus the
// per-occurrence jitter ranges that make single tokens acoustically noisy.
struct PhonemeSpec {
  std::string symbol;
  PhonemeClass klass = PhonemeClass::Vowel;
  std::vector<Partial> partials;   // voiced classes
  double band_lo_hz = 0.0;         // noisy classes
  double band_hi_hz = 0.0;
  double min_duration = 0.05;  // seconds
  double max_duration = 0.10;

  // per-occurrence variation, sampled from the occurrence seed
  double freq_jitter = 0.03;   // relative partial/band frequency spread
  double amp_jitter = 0.30;    // relative partial amplitude spread
  double gain_min = 0.45;      // overall occurrence gain range
  double gain_max = 1.00;
  double noise_min = 0.02;     // broadband noise floor, relative to gain
  double noise_max = 0.06;

  bool voiced() const {
    return klass == PhonemeClass::Vowel || klass == PhonemeClass::Approximant ||
           klass == PhonemeClass::Nasal;
  }
};

struct LexiconEntry {
  std::string word;
  std::vector<std::string> phonemes;
  std::string meaning;  // meaning id; synonyms share it
};

struct Lexicon {
  std::vector<LexiconEntry> entries;  // sorted by word

  const LexiconEntry* find(const std::string& word) const;
  // meaning ids carried by at least two distinct word forms
  std::vector<std::vector<std::string>> synonym_sets() const;
  void validate() const;
};

struct PhoneInterval {
  std::string symbol;
  PhonemeClass klass = PhonemeClass::Vowel;
  double t_start = 0.0;  // seconds
  double t_end = 0.0;
  std::uint64_t seed = 0;  // re-synthesizing with this seed reproduces the slice
};

struct UtteranceRecord {
  std::string id;
  dsp::Waveform waveform;
  std::vector<std::string> words;
  std::vector<PhoneInterval> phones;
  Vec scene;                          // unit-norm, scene_dim
  std::vector<std::string> meanings;  // multiset, kept sorted
  std::uint64_t seed = 0;
};

struct CorpusConfig {
  int sample_rate = 16000;
  int scene_dim = 64;
  double scene_jitter = 0.05;
  int train_size = 400;
  int val_size = 200;
  int sentence_len_min = 3;
  int sentence_len_max = 6;
  int min_phoneme_occurrences = 20;  // per type, in the validation set
  std::string audio_format = "wav";  // "wav" | "inline"
  Lexicon lexicon;
  std::vector<std::string> inventory;  // symbols; empty = all symbols the lexicon uses

  // jitter overrides applied to every spec; negative = keep spec defaults
  double freq_jitter = -1.0;
  double amp_jitter = -1.0;
  double gain_min = -1.0;
  double gain_max = -1.0;
  double noise_min = -1.0;
  double noise_max = -1.0;

  void validate() const;
};

struct Corpus {
  CorpusConfig cfg;
  std::uint64_t seed = 0;
  std::vector<PhonemeSpec> inventory;
  std::vector<UtteranceRecord> train;
  std::vector<UtteranceRecord> val;
};

// The full 38-symbol ARPAbet-style inventory covering the six classes.
const std::vector<PhonemeSpec>& builtin_inventory();
const PhonemeSpec& builtin_spec(const std::string& symbol);

// Inventory specs for a config (builtin table restricted to the config's
// symbols, jitter overrides applied), keyed by symbol. Errors if the lexicon
// and inventory do not cover each other.
std::map<std::string, PhonemeSpec> resolved_specs(const CorpusConfig& cfg);

// 24-word toy lexicon with four synonym pairs; the shipped default corpus.
Lexicon toy_lexicon();
CorpusConfig toy_corpus_config();

// Renders one phoneme occurrence. Deterministic in (spec, duration, seed).
Vec synth_phoneme(const PhonemeSpec& spec, double duration, std::uint64_t seed, int sample_rate);

// Scene embedding from the meaning multiset alone; unit norm. Surface forms
// never enter, so synonym-swapped sentences get identical scenes.
Vec scene_vector(const std::vector<std::string>& meaning_ids, std::uint64_t seed_base,
                 int scene_dim, double jitter);

// Concatenates per-phoneme renderings with exact interval bookkeeping.
// scene_seed_base fixes the per-meaning embeddings corpus-wide.
UtteranceRecord synth_utterance(const std::vector<std::string>& words, const Lexicon& lexicon,
                                std::uint64_t seed, const CorpusConfig& cfg,
                                const std::map<std::string, PhonemeSpec>& specs,
                                std::uint64_t scene_seed_base);

// Deterministic two-split corpus; the validation half is resampled wholesale
// until every inventory symbol reaches min_phoneme_occurrences.
Corpus generate_corpus(const CorpusConfig& cfg, std::uint64_t seed);

// CV syllable audio for the ABX task.
dsp::Waveform synth_syllable(const PhonemeSpec& consonant, const PhonemeSpec& vowel,
                             std::uint64_t seed, int sample_rate);

std::uint32_t corpus_checksum(const Corpus& corpus);

// manifest.json plus one WAV per utterance (or inline sample arrays)
void save_corpus(const Corpus& corpus, const std::string& dir);
Corpus load_corpus(const std::string& dir);

}  // namespace phonoprobe::corpus

#endif  // PHONOPROBE_CORPUS_HPP
