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

#include "phonoprobe/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "phonoprobe/util.hpp"
#include "phonoprobe/wav.hpp"

namespace phonoprobe::corpus {

namespace fs = std::filesystem;
using nlohmann::json;
using util::derive_seed;
using util::Rng;

namespace {
constexpr double kTwoPi = 6.28318530717958647692;
}

std::string to_string(PhonemeClass c) {
  switch (c) {
    case PhonemeClass::Vowel: return "vowel";
    case PhonemeClass::Approximant: return "approximant";
    case PhonemeClass::Nasal: return "nasal";
    case PhonemeClass::Plosive: return "plosive";
    case PhonemeClass::Fricative: return "fricative";
    case PhonemeClass::Affricate: return "affricate";
  }
  throw std::logic_error("unreachable phoneme class");
}

PhonemeClass phoneme_class_from_string(const std::string& s) {
  if (s == "vowel") return PhonemeClass::Vowel;
  if (s == "approximant") return PhonemeClass::Approximant;
  if (s == "nasal") return PhonemeClass::Nasal;
  if (s == "plosive") return PhonemeClass::Plosive;
  if (s == "fricative") return PhonemeClass::Fricative;
  if (s == "affricate") return PhonemeClass::Affricate;
  throw std::invalid_argument("unknown phoneme class: " + s);
}

// --- inventory ---------------------------------------------------------------

namespace {

PhonemeSpec voiced_spec(const std::string& sym, PhonemeClass k, double f1, double f2, double f3,
                        double a1, double a2, double a3, double dmin, double dmax) {
  PhonemeSpec s;
  s.symbol = sym;
  s.klass = k;
  s.partials = {{f1, a1}, {f2, a2}, {f3, a3}};
  s.min_duration = dmin;
  s.max_duration = dmax;
  return s;
}

PhonemeSpec noisy_spec(const std::string& sym, PhonemeClass k, double lo, double hi, double dmin,
                       double dmax) {
  PhonemeSpec s;
  s.symbol = sym;
  s.klass = k;
  s.band_lo_hz = lo;
  s.band_hi_hz = hi;
  s.min_duration = dmin;
  s.max_duration = dmax;
  return s;
}

std::vector<PhonemeSpec> make_inventory() {
  std::vector<PhonemeSpec> inv;
  auto vowel = [&](const std::string& s, double f1, double f2, double f3) {
    inv.push_back(voiced_spec(s, PhonemeClass::Vowel, f1, f2, f3, 1.0, 0.7, 0.35, 0.07, 0.13));
  };
  auto approximant = [&](const std::string& s, double f1, double f2, double f3) {
    inv.push_back(voiced_spec(s, PhonemeClass::Approximant, f1, f2, f3, 1.0, 0.55, 0.25, 0.05, 0.09));
  };
  auto nasal = [&](const std::string& s, double f1, double f2, double f3) {
    inv.push_back(voiced_spec(s, PhonemeClass::Nasal, f1, f2, f3, 1.0, 0.25, 0.12, 0.05, 0.09));
  };
  auto plosive = [&](const std::string& s, double lo, double hi) {
    inv.push_back(noisy_spec(s, PhonemeClass::Plosive, lo, hi, 0.04, 0.07));
  };
  auto fricative = [&](const std::string& s, double lo, double hi) {
    inv.push_back(noisy_spec(s, PhonemeClass::Fricative, lo, hi, 0.06, 0.11));
  };
  auto affricate = [&](const std::string& s, double lo, double hi) {
    inv.push_back(noisy_spec(s, PhonemeClass::Affricate, lo, hi, 0.06, 0.10));
  };

  vowel("IY", 290, 2300, 3000);
  vowel("IH", 400, 2050, 2600);
  vowel("EY", 480, 2150, 2700);
  vowel("EH", 550, 1850, 2500);
  vowel("AE", 690, 1660, 2400);
  vowel("AA", 750, 1100, 2450);
  vowel("AO", 590, 880, 2400);
  vowel("OW", 460, 760, 2250);
  vowel("UH", 440, 1020, 2280);
  vowel("UW", 310, 870, 2250);
  vowel("AH", 640, 1190, 2420);
  vowel("ER", 490, 1350, 1690);
  vowel("AY", 600, 1450, 2450);
  vowel("AW", 680, 1300, 2410);

  approximant("L", 360, 1300, 2700);
  approximant("R", 310, 1060, 1380);
  approximant("W", 290, 610, 2150);
  approximant("Y", 270, 2270, 3000);

  nasal("M", 250, 1000, 2200);
  nasal("N", 250, 1400, 2500);
  nasal("NG", 250, 1600, 2300);

  plosive("P", 400, 1600);
  plosive("B", 300, 1400);
  plosive("T", 2500, 5500);
  plosive("D", 2200, 5000);
  plosive("K", 1100, 2800);
  plosive("G", 1000, 2500);

  fricative("F", 1500, 7200);
  fricative("V", 1300, 6800);
  fricative("TH", 1400, 6200);
  fricative("DH", 1200, 5800);
  fricative("S", 4200, 7800);
  fricative("Z", 4000, 7600);
  fricative("SH", 2100, 6200);
  fricative("ZH", 1900, 5900);
  fricative("HH", 500, 6500);

  affricate("CH", 2200, 6600);
  affricate("JH", 2000, 6200);
  return inv;
}

}  // namespace

const std::vector<PhonemeSpec>& builtin_inventory() {
  static const std::vector<PhonemeSpec> inv = make_inventory();
  return inv;
}

const PhonemeSpec& builtin_spec(const std::string& symbol) {
  for (const PhonemeSpec& s : builtin_inventory()) {
    if (s.symbol == symbol) return s;
  }
  throw std::invalid_argument("unknown phoneme symbol: " + symbol);
}

// --- lexicon -----------------------------------------------------------------

const LexiconEntry* Lexicon::find(const std::string& word) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), word,
                             [](const LexiconEntry& e, const std::string& w) { return e.word < w; });
  if (it != entries.end() && it->word == word) return &*it;
  return nullptr;
}

std::vector<std::vector<std::string>> Lexicon::synonym_sets() const {
  std::map<std::string, std::vector<std::string>> by_meaning;
  for (const LexiconEntry& e : entries) by_meaning[e.meaning].push_back(e.word);
  std::vector<std::vector<std::string>> sets;
  for (auto& [meaning, words] : by_meaning) {
    if (words.size() >= 2) sets.push_back(words);
  }
  return sets;
}

void Lexicon::validate() const {
  if (entries.empty()) throw std::invalid_argument("lexicon: no entries");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const LexiconEntry& e = entries[i];
    if (e.word.empty()) throw std::invalid_argument("lexicon: empty word");
    if (e.phonemes.empty()) throw std::invalid_argument("lexicon: word '" + e.word + "' has no phonemes");
    if (e.meaning.empty()) throw std::invalid_argument("lexicon: word '" + e.word + "' has no meaning id");
    if (i > 0 && !(entries[i - 1].word < e.word)) {
      throw std::invalid_argument("lexicon: entries must be sorted by word and unique");
    }
  }
  // synonyms must differ in form
  std::map<std::string, std::vector<const LexiconEntry*>> by_meaning;
  for (const LexiconEntry& e : entries) by_meaning[e.meaning].push_back(&e);
  for (auto& [meaning, group] : by_meaning) {
    for (std::size_t i = 0; i < group.size(); ++i) {
      for (std::size_t j = i + 1; j < group.size(); ++j) {
        if (group[i]->phonemes == group[j]->phonemes) {
          throw std::invalid_argument("lexicon: synonyms '" + group[i]->word + "' and '" +
                                      group[j]->word + "' share a phoneme sequence");
        }
      }
    }
  }
}

Lexicon toy_lexicon() {
  Lexicon lex;
  auto add = [&](const std::string& w, std::vector<std::string> ph, const std::string& m) {
    lex.entries.push_back({w, std::move(ph), m});
  };
  add("cat", {"K", "AE", "T"}, "cat");
  add("feline", {"F", "IY", "L", "AY", "N"}, "cat");
  add("dog", {"D", "AO", "G"}, "dog");
  add("hound", {"HH", "AW", "N", "D"}, "dog");
  add("sofa", {"S", "OW", "F", "AH"}, "sofa");
  add("couch", {"K", "AW", "CH"}, "sofa");
  add("rock", {"R", "AA", "K"}, "rock");
  add("stone", {"S", "T", "OW", "N"}, "rock");
  add("bird", {"B", "ER", "D"}, "bird");
  add("fish", {"F", "IH", "SH"}, "fish");
  add("tree", {"T", "R", "IY"}, "tree");
  add("water", {"W", "AO", "T", "ER"}, "water");
  add("man", {"M", "AE", "N"}, "man");
  add("woman", {"W", "UH", "M", "AH", "N"}, "woman");
  add("child", {"CH", "AY", "L", "D"}, "child");
  add("house", {"HH", "AW", "S"}, "house");
  add("red", {"R", "EH", "D"}, "red");
  add("blue", {"B", "L", "UW"}, "blue");
  add("big", {"B", "IH", "G"}, "big");
  add("small", {"S", "M", "AO", "L"}, "small");
  add("jump", {"JH", "AH", "M", "P"}, "jump");
  add("sees", {"S", "IY", "Z"}, "see");
  add("the", {"DH", "AH"}, "the");
  add("ring", {"R", "IH", "NG"}, "ring");
  std::sort(lex.entries.begin(), lex.entries.end(),
            [](const LexiconEntry& a, const LexiconEntry& b) { return a.word < b.word; });
  return lex;
}

CorpusConfig toy_corpus_config() {
  CorpusConfig cfg;
  cfg.lexicon = toy_lexicon();
  return cfg;
}

void CorpusConfig::validate() const {
  if (sample_rate <= 0) throw std::invalid_argument("corpus config: sample_rate must be positive");
  if (scene_dim < 2) throw std::invalid_argument("corpus config: scene_dim must be >= 2");
  if (train_size < 0 || val_size < 0) throw std::invalid_argument("corpus config: negative set size");
  if (sentence_len_min < 1 || sentence_len_max < sentence_len_min) {
    throw std::invalid_argument("corpus config: bad sentence length range");
  }
  if (min_phoneme_occurrences < 0) throw std::invalid_argument("corpus config: negative min occurrences");
  if (audio_format != "wav" && audio_format != "inline") {
    throw std::invalid_argument("corpus config: audio_format must be 'wav' or 'inline'");
  }
  lexicon.validate();
}

// --- synthesis ---------------------------------------------------------------

namespace {

// raised-cosine fade over [0, len)
double fade_in(std::int64_t i, std::int64_t len) {
  if (len <= 0 || i >= len) return 1.0;
  return 0.5 - 0.5 * std::cos(kTwoPi / 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(len));
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// zero-mean noise restricted to [lo, hi] Hz, RMS 1, length n
Vec band_noise(std::int64_t n, double lo, double hi, int sample_rate, Rng& rng) {
  const std::size_t m = next_pow2(static_cast<std::size_t>(std::max<std::int64_t>(n, 2)));
  Vec re(m), im(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) re[i] = rng.normal();
  dsp::fft_radix2(re, im);
  for (std::size_t b = 0; b < m; ++b) {
    const std::size_t k = std::min(b, m - b);
    const double f = static_cast<double>(k) * sample_rate / static_cast<double>(m);
    if (f < lo || f > hi) {
      re[b] = 0.0;
      im[b] = 0.0;
    }
  }
  // inverse transform via conjugation
  for (std::size_t i = 0; i < m; ++i) im[i] = -im[i];
  dsp::fft_radix2(re, im);
  Vec out(n);
  double power = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    out[i] = re[i] / static_cast<double>(m);
    power += out[i] * out[i];
  }
  const double rms = std::sqrt(power / static_cast<double>(n));
  if (rms > 0.0) {
    for (double& v : out) v /= rms;
  }
  return out;
}

}  // namespace

Vec synth_phoneme(const PhonemeSpec& spec, double duration, std::uint64_t seed, int sample_rate) {
  const double tol = 0.6 / sample_rate;
  if (duration < spec.min_duration - tol || duration > spec.max_duration + tol) {
    throw std::invalid_argument("synth_phoneme: duration " + std::to_string(duration) +
                                " outside [" + std::to_string(spec.min_duration) + ", " +
                                std::to_string(spec.max_duration) + "] for " + spec.symbol);
  }
  const std::int64_t n = std::llround(duration * sample_rate);
  if (n <= 0) throw std::invalid_argument("synth_phoneme: empty duration");
  const double nyquist = sample_rate / 2.0;

  Rng rng(seed);
  const double gain = rng.uniform(spec.gain_min, spec.gain_max);
  const double noise_level = rng.uniform(spec.noise_min, spec.noise_max);

  Vec out(n, 0.0);

  if (spec.voiced()) {
    double amp_sum = 0.0;
    for (const Partial& p : spec.partials) amp_sum += p.amp;
    if (amp_sum <= 0.0) throw std::invalid_argument("synth_phoneme: voiced spec without partials");
    struct Osc {
      double freq, amp, phase;
    };
    std::vector<Osc> oscs;
    for (const Partial& p : spec.partials) {
      if (p.freq_hz >= nyquist) throw std::invalid_argument("synth_phoneme: partial above Nyquist");
      Osc o;
      o.freq = p.freq_hz * rng.uniform(1.0 - spec.freq_jitter, 1.0 + spec.freq_jitter);
      o.amp = (p.amp / amp_sum) * rng.uniform(1.0 - spec.amp_jitter, 1.0 + spec.amp_jitter);
      o.phase = rng.uniform(0.0, kTwoPi);
      oscs.push_back(o);
    }
    const std::int64_t ramp = std::min<std::int64_t>(std::llround(0.012 * sample_rate), n / 4);
    for (std::int64_t i = 0; i < n; ++i) {
      double v = 0.0;
      for (const Osc& o : oscs) v += o.amp * std::sin(kTwoPi * o.freq * i / sample_rate + o.phase);
      v += noise_level * rng.normal();
      out[i] = gain * v * fade_in(i, ramp) * fade_in(n - 1 - i, ramp);
    }
    return out;
  }

  // noisy classes share a band-limited noise source
  double lo = spec.band_lo_hz * rng.uniform(1.0 - spec.freq_jitter, 1.0 + spec.freq_jitter);
  double hi = spec.band_hi_hz * rng.uniform(1.0 - spec.freq_jitter, 1.0 + spec.freq_jitter);
  lo = std::clamp(lo, 20.0, nyquist - 100.0);
  hi = std::clamp(hi, lo + 50.0, nyquist - 10.0);

  if (spec.klass == PhonemeClass::Plosive) {
    // leading silence, then a short decaying burst
    const double silence_frac = rng.uniform(0.30, 0.45);
    const std::int64_t silence = std::llround(silence_frac * static_cast<double>(n));
    const std::int64_t burst = n - silence;
    Vec noise = band_noise(burst, lo, hi, sample_rate, rng);
    const std::int64_t attack = std::max<std::int64_t>(1, std::llround(0.002 * sample_rate));
    for (std::int64_t i = 0; i < burst; ++i) {
      const double decay = std::exp(-3.0 * static_cast<double>(i) / static_cast<double>(burst));
      out[silence + i] = gain * 0.35 * noise[i] * fade_in(i, attack) * decay;
    }
    for (std::int64_t i = 0; i < silence; ++i) out[i] = gain * noise_level * 0.1 * rng.normal();
    return out;
  }

  Vec noise = band_noise(n, lo, hi, sample_rate, rng);
  if (spec.klass == PhonemeClass::Affricate) {
    // burst-like onset settling into frication
    const std::int64_t attack = std::max<std::int64_t>(1, std::llround(0.002 * sample_rate));
    for (std::int64_t i = 0; i < n; ++i) {
      const double env = 0.55 + 0.45 * std::exp(-4.0 * static_cast<double>(i) / static_cast<double>(n));
      out[i] = gain * 0.35 * noise[i] * env * fade_in(i, attack) * fade_in(n - 1 - i, attack);
    }
  } else {  // fricative
    const std::int64_t ramp = std::min<std::int64_t>(std::llround(0.015 * sample_rate), n / 4);
    for (std::int64_t i = 0; i < n; ++i) {
      out[i] = gain * 0.35 * noise[i] * fade_in(i, ramp) * fade_in(n - 1 - i, ramp);
    }
  }
  return out;
}

Vec scene_vector(const std::vector<std::string>& meaning_ids, std::uint64_t seed_base,
                 int scene_dim, double jitter) {
  if (meaning_ids.empty()) throw std::invalid_argument("scene_vector: empty meaning multiset");
  if (scene_dim < 2) throw std::invalid_argument("scene_vector: scene_dim must be >= 2");

  std::vector<std::string> sorted = meaning_ids;
  std::sort(sorted.begin(), sorted.end());

  Vec sum(scene_dim, 0.0);
  for (const std::string& m : sorted) {
    Rng rng(derive_seed(seed_base, "meaning", util::fnv1a(m)));
    Vec e(scene_dim);
    for (double& v : e) v = rng.normal();
    const double norm = la::norm2(e);
    for (int i = 0; i < scene_dim; ++i) sum[i] += e[i] / norm;
  }

  if (jitter > 0.0) {
    std::uint64_t multiset_hash = util::fnv1a("multiset");
    for (const std::string& m : sorted) multiset_hash = derive_seed(multiset_hash, m);
    Rng rng(derive_seed(seed_base, "jitter", multiset_hash));
    for (double& v : sum) v += jitter * rng.normal();
  }

  const double norm = la::norm2(sum);
  if (norm == 0.0) throw std::runtime_error("scene_vector: degenerate zero vector");
  for (double& v : sum) v /= norm;
  return sum;
}

UtteranceRecord synth_utterance(const std::vector<std::string>& words, const Lexicon& lexicon,
                                std::uint64_t seed, const CorpusConfig& cfg,
                                const std::map<std::string, PhonemeSpec>& specs,
                                std::uint64_t scene_seed_base) {
  UtteranceRecord rec;
  rec.seed = seed;
  rec.words = words;
  rec.waveform.sample_rate = cfg.sample_rate;

  std::int64_t offset = 0;
  int phone_index = 0;
  for (const std::string& word : words) {
    const LexiconEntry* entry = lexicon.find(word);
    if (entry == nullptr) throw std::invalid_argument("synth_utterance: unknown word '" + word + "'");
    rec.meanings.push_back(entry->meaning);
    for (const std::string& sym : entry->phonemes) {
      auto it = specs.find(sym);
      if (it == specs.end()) throw std::invalid_argument("synth_utterance: phoneme '" + sym + "' not in inventory");
      const PhonemeSpec& spec = it->second;

      const std::uint64_t phone_seed = derive_seed(seed, "phone", static_cast<std::uint64_t>(phone_index));
      Rng dur_rng(derive_seed(phone_seed, "dur"));
      const double u = dur_rng.uniform(spec.min_duration, spec.max_duration);
      std::int64_t n = std::llround(u * cfg.sample_rate);
      n = std::clamp<std::int64_t>(n, std::llround(spec.min_duration * cfg.sample_rate),
                                   std::llround(spec.max_duration * cfg.sample_rate));

      const std::uint64_t synth_seed = derive_seed(phone_seed, "synth");
      const Vec samples =
          synth_phoneme(spec, static_cast<double>(n) / cfg.sample_rate, synth_seed, cfg.sample_rate);

      PhoneInterval ph;
      ph.symbol = sym;
      ph.klass = spec.klass;
      ph.t_start = static_cast<double>(offset) / cfg.sample_rate;
      ph.t_end = static_cast<double>(offset + n) / cfg.sample_rate;
      ph.seed = synth_seed;
      rec.phones.push_back(ph);

      rec.waveform.samples.insert(rec.waveform.samples.end(), samples.begin(), samples.end());
      offset += n;
      ++phone_index;
    }
  }
  std::sort(rec.meanings.begin(), rec.meanings.end());
  rec.scene = scene_vector(rec.meanings, scene_seed_base, cfg.scene_dim, cfg.scene_jitter);
  return rec;
}

// --- corpus generation -------------------------------------------------------

namespace {

std::vector<std::string> sample_sentence(Rng& rng, const Lexicon& lex, int len_min, int len_max) {
  const int len = len_min + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(len_max - len_min + 1)));
  std::vector<std::string> words(len);
  for (int i = 0; i < len; ++i) {
    words[i] = lex.entries[rng.uniform_int(lex.entries.size())].word;
  }
  return words;
}

std::string format_id(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s-%05d", prefix, i);
  return buf;
}

}  // namespace

std::map<std::string, PhonemeSpec> resolved_specs(const CorpusConfig& cfg) {
  std::set<std::string> used;
  for (const LexiconEntry& e : cfg.lexicon.entries) used.insert(e.phonemes.begin(), e.phonemes.end());
  std::vector<std::string> symbols = cfg.inventory;
  if (symbols.empty()) symbols.assign(used.begin(), used.end());
  std::sort(symbols.begin(), symbols.end());

  std::map<std::string, PhonemeSpec> specs;
  for (const std::string& sym : symbols) {
    if (used.find(sym) == used.end()) {
      throw std::invalid_argument("resolved_specs: lexicon cannot cover the inventory; '" + sym +
                                  "' appears in no word");
    }
    PhonemeSpec spec = builtin_spec(sym);
    if (cfg.freq_jitter >= 0.0) spec.freq_jitter = cfg.freq_jitter;
    if (cfg.amp_jitter >= 0.0) spec.amp_jitter = cfg.amp_jitter;
    if (cfg.gain_min >= 0.0) spec.gain_min = cfg.gain_min;
    if (cfg.gain_max >= 0.0) spec.gain_max = cfg.gain_max;
    if (cfg.noise_min >= 0.0) spec.noise_min = cfg.noise_min;
    if (cfg.noise_max >= 0.0) spec.noise_max = cfg.noise_max;
    specs.emplace(sym, std::move(spec));
  }
  for (const std::string& sym : used) {
    if (specs.find(sym) == specs.end()) {
      throw std::invalid_argument("resolved_specs: lexicon uses '" + sym + "' which is outside the inventory");
    }
  }
  return specs;
}

Corpus generate_corpus(const CorpusConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const std::map<std::string, PhonemeSpec> specs = resolved_specs(cfg);
  std::vector<std::string> symbols;
  for (const auto& [sym, spec] : specs) symbols.push_back(sym);

  Corpus corpus;
  corpus.cfg = cfg;
  corpus.seed = seed;
  for (const std::string& sym : symbols) corpus.inventory.push_back(specs.at(sym));

  // train sentences
  std::vector<std::vector<std::string>> train_sentences(cfg.train_size);
  for (int i = 0; i < cfg.train_size; ++i) {
    Rng rng(derive_seed(seed, "train-sent", static_cast<std::uint64_t>(i)));
    train_sentences[i] = sample_sentence(rng, cfg.lexicon, cfg.sentence_len_min, cfg.sentence_len_max);
  }

  // validation sentences: regenerate the whole draw until every phoneme type
  // is frequent enough; the accepted attempt index is itself deterministic
  std::vector<std::vector<std::string>> val_sentences;
  constexpr int kMaxAttempts = 50;
  bool satisfied = false;
  for (int attempt = 0; attempt < kMaxAttempts && !satisfied; ++attempt) {
    val_sentences.assign(cfg.val_size, {});
    std::map<std::string, int> counts;
    for (int i = 0; i < cfg.val_size; ++i) {
      Rng rng(derive_seed(seed, "val-sent", static_cast<std::uint64_t>(attempt),
                          static_cast<std::uint64_t>(i)));
      val_sentences[i] = sample_sentence(rng, cfg.lexicon, cfg.sentence_len_min, cfg.sentence_len_max);
      for (const std::string& w : val_sentences[i]) {
        for (const std::string& p : cfg.lexicon.find(w)->phonemes) ++counts[p];
      }
    }
    satisfied = true;
    for (const std::string& sym : symbols) {
      if (counts[sym] < cfg.min_phoneme_occurrences) {
        satisfied = false;
        break;
      }
    }
  }
  if (!satisfied) {
    throw std::runtime_error(
        "generate_corpus: could not reach min_phoneme_occurrences in the validation set; "
        "lexicon coverage is too thin for the requested sizes");
  }

  const std::uint64_t scene_base = derive_seed(seed, "scene");
  corpus.train.resize(cfg.train_size);
  corpus.val.resize(cfg.val_size);
  util::parallel_for(cfg.train_size + cfg.val_size, [&](std::int64_t idx) {
    if (idx < cfg.train_size) {
      const int i = static_cast<int>(idx);
      corpus.train[i] = synth_utterance(train_sentences[i], cfg.lexicon,
                                        derive_seed(seed, "train-utt", static_cast<std::uint64_t>(i)),
                                        cfg, specs, scene_base);
      corpus.train[i].id = format_id("train", i);
    } else {
      const int i = static_cast<int>(idx - cfg.train_size);
      corpus.val[i] = synth_utterance(val_sentences[i], cfg.lexicon,
                                      derive_seed(seed, "val-utt", static_cast<std::uint64_t>(i)),
                                      cfg, specs, scene_base);
      corpus.val[i].id = format_id("val", i);
    }
  });
  return corpus;
}

dsp::Waveform synth_syllable(const PhonemeSpec& consonant, const PhonemeSpec& vowel,
                             std::uint64_t seed, int sample_rate) {
  const double cdur = 0.5 * (consonant.min_duration + consonant.max_duration);
  const double vdur = 0.5 * (vowel.min_duration + vowel.max_duration);
  const std::int64_t cn = std::llround(cdur * sample_rate);
  const std::int64_t vn = std::llround(vdur * sample_rate);

  dsp::Waveform wave;
  wave.sample_rate = sample_rate;
  const Vec c = synth_phoneme(consonant, static_cast<double>(cn) / sample_rate,
                              derive_seed(seed, "c"), sample_rate);
  const Vec v = synth_phoneme(vowel, static_cast<double>(vn) / sample_rate,
                              derive_seed(seed, "v"), sample_rate);
  wave.samples = c;
  wave.samples.insert(wave.samples.end(), v.begin(), v.end());
  return wave;
}

// --- checksums and serialization ----------------------------------------------

namespace {

void crc_bytes(std::uint32_t& c, const void* p, std::size_t n) { c = util::crc32(p, n, c); }

void crc_str(std::uint32_t& c, const std::string& s) { crc_bytes(c, s.data(), s.size()); }

void crc_f64(std::uint32_t& c, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  crc_bytes(c, &bits, 8);
}

void crc_record(std::uint32_t& c, const UtteranceRecord& r) {
  crc_str(c, r.id);
  for (const std::string& w : r.words) crc_str(c, w);
  for (const PhoneInterval& p : r.phones) {
    crc_str(c, p.symbol);
    crc_str(c, to_string(p.klass));
    crc_f64(c, p.t_start);
    crc_f64(c, p.t_end);
    crc_bytes(c, &p.seed, 8);
  }
  for (const std::string& m : r.meanings) crc_str(c, m);
  for (double v : r.scene) crc_f64(c, v);
  const std::vector<std::int16_t> pcm = wav::quantize(r.waveform.samples);
  crc_bytes(c, pcm.data(), pcm.size() * 2);
}

json lexicon_to_json(const Lexicon& lex) {
  json arr = json::array();
  for (const LexiconEntry& e : lex.entries) {
    arr.push_back({{"word", e.word}, {"phonemes", e.phonemes}, {"meaning", e.meaning}});
  }
  return arr;
}

Lexicon lexicon_from_json(const json& arr) {
  Lexicon lex;
  for (const json& e : arr) {
    LexiconEntry entry;
    entry.word = e.at("word").get<std::string>();
    entry.phonemes = e.at("phonemes").get<std::vector<std::string>>();
    entry.meaning = e.at("meaning").get<std::string>();
    lex.entries.push_back(std::move(entry));
  }
  std::sort(lex.entries.begin(), lex.entries.end(),
            [](const LexiconEntry& a, const LexiconEntry& b) { return a.word < b.word; });
  return lex;
}

json config_to_json(const CorpusConfig& cfg) {
  json j;
  j["sample_rate"] = cfg.sample_rate;
  j["scene_dim"] = cfg.scene_dim;
  j["scene_jitter"] = cfg.scene_jitter;
  j["train_size"] = cfg.train_size;
  j["val_size"] = cfg.val_size;
  j["sentence_len_min"] = cfg.sentence_len_min;
  j["sentence_len_max"] = cfg.sentence_len_max;
  j["min_phoneme_occurrences"] = cfg.min_phoneme_occurrences;
  j["audio_format"] = cfg.audio_format;
  j["lexicon"] = lexicon_to_json(cfg.lexicon);
  j["inventory"] = cfg.inventory;
  j["freq_jitter"] = cfg.freq_jitter;
  j["amp_jitter"] = cfg.amp_jitter;
  j["gain_min"] = cfg.gain_min;
  j["gain_max"] = cfg.gain_max;
  j["noise_min"] = cfg.noise_min;
  j["noise_max"] = cfg.noise_max;
  return j;
}

CorpusConfig config_from_json(const json& j) {
  CorpusConfig cfg;
  cfg.sample_rate = j.at("sample_rate").get<int>();
  cfg.scene_dim = j.at("scene_dim").get<int>();
  cfg.scene_jitter = j.at("scene_jitter").get<double>();
  cfg.train_size = j.at("train_size").get<int>();
  cfg.val_size = j.at("val_size").get<int>();
  cfg.sentence_len_min = j.at("sentence_len_min").get<int>();
  cfg.sentence_len_max = j.at("sentence_len_max").get<int>();
  cfg.min_phoneme_occurrences = j.at("min_phoneme_occurrences").get<int>();
  cfg.audio_format = j.at("audio_format").get<std::string>();
  cfg.lexicon = lexicon_from_json(j.at("lexicon"));
  cfg.inventory = j.at("inventory").get<std::vector<std::string>>();
  cfg.freq_jitter = j.at("freq_jitter").get<double>();
  cfg.amp_jitter = j.at("amp_jitter").get<double>();
  cfg.gain_min = j.at("gain_min").get<double>();
  cfg.gain_max = j.at("gain_max").get<double>();
  cfg.noise_min = j.at("noise_min").get<double>();
  cfg.noise_max = j.at("noise_max").get<double>();
  return cfg;
}

json record_to_json(const UtteranceRecord& r, const std::string& audio_format,
                    const std::string& wav_rel_path) {
  json j;
  j["id"] = r.id;
  j["seed"] = r.seed;
  j["words"] = r.words;
  j["meanings"] = r.meanings;
  j["scene"] = r.scene;
  json phones = json::array();
  for (const PhoneInterval& p : r.phones) {
    phones.push_back({{"symbol", p.symbol},
                      {"class", to_string(p.klass)},
                      {"t_start", p.t_start},
                      {"t_end", p.t_end},
                      {"seed", p.seed}});
  }
  j["phones"] = phones;
  if (audio_format == "inline") {
    j["samples"] = r.waveform.samples;
  } else {
    j["audio"] = wav_rel_path;
  }
  return j;
}

UtteranceRecord record_from_json(const json& j, const std::string& dir, int sample_rate) {
  UtteranceRecord r;
  r.id = j.at("id").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.words = j.at("words").get<std::vector<std::string>>();
  r.meanings = j.at("meanings").get<std::vector<std::string>>();
  r.scene = j.at("scene").get<Vec>();
  for (const json& p : j.at("phones")) {
    PhoneInterval ph;
    ph.symbol = p.at("symbol").get<std::string>();
    ph.klass = phoneme_class_from_string(p.at("class").get<std::string>());
    ph.t_start = p.at("t_start").get<double>();
    ph.t_end = p.at("t_end").get<double>();
    ph.seed = p.at("seed").get<std::uint64_t>();
    r.phones.push_back(ph);
  }
  if (j.contains("samples")) {
    r.waveform.samples = j.at("samples").get<Vec>();
    r.waveform.sample_rate = sample_rate;
  } else {
    r.waveform = wav::read_wav((fs::path(dir) / j.at("audio").get<std::string>()).string());
  }
  return r;
}

}  // namespace

std::uint32_t corpus_checksum(const Corpus& corpus) {
  std::uint32_t c = 0;
  for (const UtteranceRecord& r : corpus.train) crc_record(c, r);
  for (const UtteranceRecord& r : corpus.val) crc_record(c, r);
  return c;
}

void save_corpus(const Corpus& corpus, const std::string& dir) {
  fs::create_directories(dir);
  const bool wav_mode = corpus.cfg.audio_format == "wav";
  if (wav_mode) fs::create_directories(fs::path(dir) / "wav");

  json manifest;
  manifest["format"] = "phonoprobe-corpus";
  manifest["version"] = 1;
  manifest["seed"] = corpus.seed;
  char checksum[16];
  std::snprintf(checksum, sizeof(checksum), "%08x", corpus_checksum(corpus));
  manifest["checksum"] = checksum;
  manifest["config"] = config_to_json(corpus.cfg);
  json inv = json::array();
  for (const PhonemeSpec& s : corpus.inventory) {
    inv.push_back({{"symbol", s.symbol}, {"class", to_string(s.klass)}});
  }
  manifest["inventory"] = inv;

  auto dump_split = [&](const std::vector<UtteranceRecord>& records) {
    json arr = json::array();
    for (const UtteranceRecord& r : records) {
      const std::string rel = "wav/" + r.id + ".wav";
      if (wav_mode) wav::write_wav((fs::path(dir) / rel).string(), r.waveform);
      arr.push_back(record_to_json(r, corpus.cfg.audio_format, rel));
    }
    return arr;
  };
  manifest["train"] = dump_split(corpus.train);
  manifest["val"] = dump_split(corpus.val);

  std::ofstream f(fs::path(dir) / "manifest.json");
  if (!f) throw std::runtime_error("save_corpus: cannot write manifest in " + dir);
  f << manifest.dump(1) << "\n";
}

Corpus load_corpus(const std::string& dir) {
  std::ifstream f(fs::path(dir) / "manifest.json");
  if (!f) throw std::runtime_error("load_corpus: no manifest.json in " + dir);
  json manifest = json::parse(f);
  if (manifest.at("format").get<std::string>() != "phonoprobe-corpus") {
    throw std::runtime_error("load_corpus: " + dir + " is not a corpus directory");
  }

  Corpus corpus;
  corpus.seed = manifest.at("seed").get<std::uint64_t>();
  corpus.cfg = config_from_json(manifest.at("config"));
  for (const auto& [sym, spec] : resolved_specs(corpus.cfg)) corpus.inventory.push_back(spec);
  for (const json& r : manifest.at("train")) {
    corpus.train.push_back(record_from_json(r, dir, corpus.cfg.sample_rate));
  }
  for (const json& r : manifest.at("val")) {
    corpus.val.push_back(record_from_json(r, dir, corpus.cfg.sample_rate));
  }
  return corpus;
}

}  // namespace phonoprobe::corpus
