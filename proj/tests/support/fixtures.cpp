#include "fixtures.hpp"

#include <array>
#include <sstream>

#include "emphi/common.hpp"
#include "emphi/tokenize.hpp"

namespace emphi::fixtures {
namespace {

struct IntentPool {
  std::array<const char*, 8> templates;
  std::array<const char*, 25> tails;
  std::vector<std::string> expected;
};

// Template pools, one per intent in canonical order. The ten words each
// intent is calibrated around appear in at least two templates apiece;
// tail words rotate through every other reply and stay rare enough not to
// outrank them.
const std::array<IntentPool, kNumIntents>& pools() {
  static const std::array<IntentPool, kNumIntents> p = {{
      // Agreeing
      {{"oh right i know exactly what you mean",
        "i definitely agree with you on that",
        "i understand that feeling and i agree",
        "i know exactly how you feel",
        "yes i agree that is exactly right",
        "oh i definitely know what you mean",
        "i feel the same and i agree with you",
        "you are right i understand that feeling"},
       {"relate", "relatable", "mutual", "shared", "perspective", "opinion", "honestly",
        "certainly", "resonate", "resonates", "sentiment", "sentiments", "precisely", "likewise",
        "agreed", "understood", "validate", "valid", "fair", "reasonable", "logical", "sensible",
        "stance", "viewpoint", "indeed"},
       {"know", "understand", "agree", "definitely", "feel", "feeling", "exactly", "mean", "oh",
        "right"}},
      // Acknowledging
      {{"that sounds really nice",
        "oh that sounds really awesome",
        "that is cool i like it",
        "sounds great that must be really nice",
        "oh that sounds like an awesome experience",
        "oh that must be really cool",
        "i like that it sounds great",
        "that would be nice i would like it"},
       {"impressive", "fascinating", "amazing", "brilliant", "lovely", "delightful", "splendid",
        "intriguing", "remarkable", "charming", "exciting", "thrilling", "superb", "stellar",
        "neat", "marvelous", "glorious", "radiant", "vivid", "crisp", "fresh", "stunning",
        "gorgeous", "vibrant", "dazzling"},
       {"sounds", "nice", "awesome", "like", "great", "cool", "would", "oh", "must", "really"}},
      // Encouraging
      {{"i hope it goes well for you",
        "hopefully you get good news soon",
        "i bet it goes great this time",
        "you will get there in good time",
        "i hope it gets easier soon",
        "it will turn out great i bet",
        "i hope it goes very well",
        "hopefully good news comes soon"},
       {"persevere", "persist", "momentum", "progress", "strive", "thrive", "courage",
        "confident", "capable", "determined", "spirit", "push", "forward", "effort", "practice",
        "improve", "stronger", "mindset", "focus", "dedication", "commitment", "resilient",
        "optimistic", "upbeat", "motivated"},
       {"hope", "well", "hopefully", "get", "good", "time", "bet", "great", "goes", "soon"}},
      // Consoling
      {{"i hope things get better soon",
        "hopefully you find peace in time",
        "things will get better with time",
        "i hope you get better soon",
        "you will find good things in time",
        "hopefully it all gets better from here",
        "may you find comfort and get well soon",
        "rest well and may good things come"},
       {"comfort", "comforting", "quiet", "peaceful", "healing", "gentle", "gently", "ease",
        "relief", "calm", "calming", "soothe", "soothing", "rest", "recovery", "recover", "mend",
        "mended", "solace", "warmth", "tender", "kindness", "patience", "patient", "restful"},
       {"hope", "hopefully", "get", "better", "well", "soon", "time", "find", "good", "things"}},
      // Sympathizing
      {{"i am so sorry to hear that",
        "oh i am really sorry that happened",
        "aw i am sorry for your loss",
        "i am sorry to hear what happened",
        "aw that is awful i feel for you",
        "i am sorry i hope you are okay",
        "oh i really feel for you",
        "sorry to hear about your loss i hope it passes"},
       {"condolences", "sympathies", "grieve", "grieving", "mourn", "mourning", "heartbroken",
        "heartbreaking", "tragic", "tragedy", "painful", "devastating", "tough", "rough",
        "unfair", "unfortunate", "terrible", "horrible", "hurts", "hurting", "ache", "aching",
        "weep", "tears", "sadness"},
       {"sorry", "hear", "oh", "am", "happened", "loss", "feel", "hope", "really", "aw"}},
      // Suggesting
      {{"maybe you could try something new",
        "i think you should try again next time",
        "maybe go and get some sleep",
        "you could try something different next time",
        "i think it might be well worth a try",
        "maybe take some time and think it over",
        "you could go and get some air",
        "it could turn out well if you try"},
       {"suggest", "suggestion", "recommend", "recommendation", "advise", "advice", "option",
        "options", "alternative", "alternatively", "approach", "strategy", "plan", "consider",
        "considering", "idea", "ideas", "propose", "proposal", "route", "path", "method",
        "tactic", "angle", "experiment"},
       {"maybe", "get", "time", "could", "think", "well", "next", "something", "try", "go"}},
      // Questioning
      {{"oh how did it go",
        "how long were you going there",
        "what kind of work do you do",
        "did you get a good result",
        "how long is it going to take",
        "oh what was it like",
        "what kind of work was it",
        "maybe you get to go again"},
       {"wonder", "wondering", "curious", "curiosity", "question", "questions", "ask", "asking",
        "detail", "details", "elaborate", "explain", "specifics", "specifically", "clarify",
        "clarity", "describe", "description", "circumstances", "particulars", "inquire",
        "happening", "happen", "backstory", "rundown"},
       {"oh", "get", "go", "going", "long", "kind", "like", "work", "good", "maybe"}},
      // Wishing
      {{"congratulations i wish you the best of luck",
        "oh wow congratulations on the news",
        "happy birthday i wish you a wonderful day",
        "good luck i wish you well",
        "wow that is wonderful congratulations",
        "i wish you the very best good luck",
        "oh happy birthday and a good day to you",
        "best of luck may it all end well"},
       {"celebrate", "celebration", "cheers", "blessed", "blessing", "blessings", "joyous",
        "festive", "merry", "milestone", "achievement", "accomplishment", "proud", "pride",
        "toast", "occasion", "ceremony", "anniversary", "graduation", "promotion", "success",
        "successful", "prosperity", "prosperous", "triumphant"},
       {"congratulations", "luck", "good", "wish", "best", "well", "happy", "oh", "birthday",
        "wow"}},
      // Neutral
      {{"sure i have seen people like that",
        "well that is one way to look at it",
        "i never get tired of that",
        "most people have a good time there",
        "sure i like that one",
        "i have never been there myself",
        "people like that are there all the time",
        "well sure that happens all the time"},
       {"ordinary", "typical", "common", "usual", "standard", "general", "generally", "routine",
        "everyday", "average", "regular", "normal", "plain", "moderate", "casual", "indifferent",
        "whatever", "anyway", "anyhow", "meanwhile", "elsewhere", "otherwise", "somewhat",
        "rather", "plenty"},
       {"good", "like", "sure", "well", "time", "one", "have", "people", "never", "get"}},
  }};
  return p;
}

std::string reply_text(int intent_id, int i) {
  const auto& pool = pools()[static_cast<std::size_t>(intent_id)];
  std::string text = pool.templates[static_cast<std::size_t>(i % 8)];
  if (i % 2 == 0) {
    text += " ";
    text += pool.tails[static_cast<std::size_t>((i / 2) % 25)];
  }
  return text;
}

// (primary, secondary) listener intents plausible for each emotion id.
const std::array<std::pair<int, int>, kNumEmotions>& emotion_intents() {
  auto id = [](const char* name) { return intent_by_name(name)->id; };
  static const std::array<std::pair<int, int>, kNumEmotions> table = {{
      {id("Questioning"), id("Acknowledging")},   // surprised
      {id("Acknowledging"), id("Questioning")},   // excited
      {id("Consoling"), id("Suggesting")},        // annoyed
      {id("Wishing"), id("Acknowledging")},       // proud
      {id("Consoling"), id("Suggesting")},        // angry
      {id("Sympathizing"), id("Consoling")},      // sad
      {id("Acknowledging"), id("Agreeing")},      // grateful
      {id("Sympathizing"), id("Suggesting")},     // lonely
      {id("Acknowledging"), id("Questioning")},   // impressed
      {id("Encouraging"), id("Consoling")},       // afraid
      {id("Agreeing"), id("Questioning")},        // disgusted
      {id("Encouraging"), id("Agreeing")},        // confident
      {id("Sympathizing"), id("Consoling")},      // terrified
      {id("Encouraging"), id("Agreeing")},        // hopeful
      {id("Consoling"), id("Encouraging")},       // anxious
      {id("Sympathizing"), id("Consoling")},      // disappointed
      {id("Wishing"), id("Acknowledging")},       // joyful
      {id("Encouraging"), id("Neutral")},         // prepared
      {id("Consoling"), id("Suggesting")},        // guilty
      {id("Sympathizing"), id("Suggesting")},     // furious
      {id("Neutral"), id("Questioning")},         // nostalgic
      {id("Neutral"), id("Suggesting")},          // jealous
      {id("Questioning"), id("Encouraging")},     // anticipating
      {id("Consoling"), id("Neutral")},           // embarrassed
      {id("Agreeing"), id("Neutral")},            // content
      {id("Sympathizing"), id("Consoling")},      // devastated
      {id("Neutral"), id("Agreeing")},            // sentimental
      {id("Agreeing"), id("Acknowledging")},      // caring
      {id("Agreeing"), id("Neutral")},            // trusting
      {id("Consoling"), id("Encouraging")},       // ashamed
      {id("Encouraging"), id("Suggesting")},      // apprehensive
      {id("Encouraging"), id("Agreeing")},        // faithful
  }};
  return table;
}

const std::array<const char*, 12> kNouns = {
    "dog",     "cat",      "sister",   "brother", "friend",   "boss",
    "neighbor", "cousin",  "teacher",  "landlord", "coworker", "roommate"};

const std::array<const char*, 10> kEvents = {
    "broke down",          "moved away",      "got lost",        "came home",
    "won the big game",    "fell apart",      "passed the exam", "called me late",
    "showed up early",     "quit the team"};

const std::array<const char*, 4> kFollows = {
    "it was a lot to take in", "it keeps happening to me", "that is where it stands",
    "it has been on my mind since"};

std::string prompt_text(int emotion_id, int variant, const std::string& noun,
                        const std::string& event) {
  const std::string emo(emotion_names()[static_cast<std::size_t>(emotion_id)]);
  switch (variant % 3) {
    case 0: return "i felt so " + emo + " when my " + noun + " " + event;
    case 1: return "my " + noun + " " + event + " and i was " + emo;
    default: return "i am feeling " + emo + " because my " + noun + " " + event;
  }
}

struct ConvTurn {
  int utterance_idx = 0;
  std::string text;
};

struct Conversation {
  std::string id;
  int emotion_id = 0;
  std::vector<ConvTurn> turns;  // alternating speaker / listener
};

std::vector<Conversation> build_conversations(const std::string& split_tag, int count,
                                              std::uint64_t seed) {
  RngStream rng = RngStream::fork(seed, "fixture.dialogues." + split_tag);
  std::vector<Conversation> convs;
  convs.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Conversation c;
    c.id = "hit:" + split_tag + ":" + std::to_string(i);
    c.emotion_id = i % kNumEmotions;
    const auto [primary, secondary] = emotion_intents()[static_cast<std::size_t>(c.emotion_id)];
    int intent = rng.uniform() < 0.5 ? primary : secondary;

    std::string noun = kNouns[rng.below(kNouns.size())];
    std::string event = kEvents[rng.below(kEvents.size())];
    c.turns.push_back({1, prompt_text(c.emotion_id, i / kNumEmotions, noun, event)});
    c.turns.push_back({2, reply_text(intent, static_cast<int>(rng.below(8)) * 2 + 1)});
    if (i % 4 == 3) {
      c.turns.push_back({3, std::string("yeah ") + kFollows[rng.below(kFollows.size())]});
      c.turns.push_back({4, reply_text(intent, static_cast<int>(rng.below(8)) * 2 + 1)});
    }
    convs.push_back(std::move(c));
  }
  return convs;
}

std::string csv_escape(std::string s) {
  std::size_t pos = 0;
  while ((pos = s.find(',', pos)) != std::string::npos) {
    s.replace(pos, 1, "_comma_");
    pos += 7;
  }
  return s;
}

}  // namespace

std::vector<IntentExample> reply_corpus(int per_intent) {
  std::vector<IntentExample> out;
  out.reserve(static_cast<std::size_t>(per_intent) * kNumIntents);
  for (int z = 0; z < kNumIntents; ++z) {
    for (int i = 0; i < per_intent; ++i) {
      out.push_back(IntentExample{reply_text(z, i), intent_by_id(z)});
    }
  }
  return out;
}

void write_reply_csv(const std::filesystem::path& path, int per_intent) {
  std::ostringstream ss;
  ss << "text,intent\n";
  for (const auto& ex : reply_corpus(per_intent)) {
    ss << csv_escape(ex.text) << "," << ex.intent.name << "\n";
  }
  atomic_write_file(path, ss.str());
}

const std::vector<std::string>& expected_keywords(int intent_id) {
  return pools()[static_cast<std::size_t>(intent_id)].expected;
}

std::vector<IntentExample> separable_corpus(int per_intent) {
  static const std::array<const char*, kNumIntents> prefixes = {
      "vor", "zel", "mak", "tun", "rip", "gos", "fen", "bul", "daz"};
  static const std::array<const char*, 12> suffixes = {
      "ath", "eem", "oli", "und", "ika", "ost", "ura", "ent", "ave", "ilo", "usk", "ern"};
  std::vector<IntentExample> out;
  for (int z = 0; z < kNumIntents; ++z) {
    std::vector<std::string> words;
    for (const char* s : suffixes) words.push_back(std::string(prefixes[static_cast<std::size_t>(z)]) + s);
    for (int j = 0; j < per_intent; ++j) {
      std::string text = words[static_cast<std::size_t>(j % 12)];
      text += " " + words[static_cast<std::size_t>((j * 5 + 1) % 12)];
      text += " " + words[static_cast<std::size_t>((j * 7 + 2) % 12)];
      text += " " + words[static_cast<std::size_t>((j * 11 + 6) % 12)];
      text += " " + words[static_cast<std::size_t>((3 * j + 4) % 12)];
      out.push_back(IntentExample{text, intent_by_id(z)});
    }
  }
  return out;
}

TemplatedCorpus templated_corpus() {
  static const std::array<const char*, kNumIntents> prefixes = {
      "tor", "nel", "sav", "lum", "pek", "wid", "hoz", "fyr", "qub"};
  static const std::array<const char*, 12> suffixes = {
      "ane", "ipo", "oku", "est", "arn", "ilt", "ody", "umb", "eft", "iga", "olo", "usk"};
  static const std::array<const char*, 4> glue = {
      "a % with a % on the %", "the % of the % and a %", "some % by the % with the %",
      "the % and some % off the %"};
  static const std::array<const char*, 10> topics = {
      "arbel", "bonik", "celus", "dorim", "ettal", "fenor", "gilam", "horet", "ivon", "jadur"};

  TemplatedCorpus out;
  std::array<std::vector<std::string>, kNumIntents> cores;
  for (int z = 0; z < kNumIntents; ++z) {
    for (const char* s : suffixes) {
      cores[static_cast<std::size_t>(z)].push_back(
          std::string(prefixes[static_cast<std::size_t>(z)]) + s);
    }
  }

  auto render = [&](int z, int j) {
    const auto& core = cores[static_cast<std::size_t>(z)];
    std::array<std::string, 3> picks = {core[static_cast<std::size_t>((j * 3) % 12)],
                                        core[static_cast<std::size_t>((j * 5 + 1) % 12)],
                                        core[static_cast<std::size_t>((j * 7 + 2) % 12)]};
    std::string text;
    std::size_t next = 0;
    for (const char* p = glue[static_cast<std::size_t>(j % 4)]; *p; ++p) {
      if (*p == '%') {
        text += picks[next++];
      } else {
        text += *p;
      }
    }
    return text;
  };

  for (int z = 0; z < kNumIntents; ++z) {
    for (int j = 0; j < 40; ++j) {
      out.replies.push_back(IntentExample{render(z, j), intent_by_id(z)});
    }
  }
  for (const char* topic : topics) {
    out.contexts.push_back(std::string("tell me about the ") + topic + " please");
  }
  int conv = 0;
  for (int c = 0; c < 10; ++c) {
    for (int z = 0; z < kNumIntents; ++z) {
      for (int r = 0; r < 4; ++r) {
        NormalizedExample ex;
        ex.context = {out.contexts[static_cast<std::size_t>(c)]};
        ex.response = render(z, c * 4 + r);
        ex.emotion = std::string(emotion_names()[static_cast<std::size_t>((c * 9 + z) % kNumEmotions)]);
        ex.conv_id = "tpl:" + std::to_string(conv++);
        out.dialogues.push_back(std::move(ex));
      }
    }
  }
  return out;
}

std::vector<NormalizedExample> toy_dialogues(int count) {
  std::vector<std::string> ctx_words;
  std::vector<std::string> resp_words;
  static const std::array<const char*, 12> heads = {"ba", "ce", "di", "fo", "gu", "ha",
                                                    "ji", "ko", "lu", "me", "ni", "po"};
  static const std::array<const char*, 10> mids = {"ra", "se", "ti", "vo", "wu",
                                                   "ya", "zo", "ne", "la", "mi"};
  for (int a = 0; a < 12; ++a) {
    for (int b = 0; b < 10; ++b) {
      ctx_words.push_back(std::string(heads[static_cast<std::size_t>(a)]) +
                          mids[static_cast<std::size_t>(b)] + "t");
    }
  }
  for (int a = 0; a < 9; ++a) {
    for (int b = 0; b < 10; ++b) {
      resp_words.push_back(std::string(mids[static_cast<std::size_t>(b)]) +
                           heads[static_cast<std::size_t>(a)] + "n");
    }
  }

  std::vector<NormalizedExample> out;
  for (int i = 0; i < count; ++i) {
    auto cw = [&](int k) { return ctx_words[static_cast<std::size_t>(k % 120)]; };
    auto rw = [&](int k) { return resp_words[static_cast<std::size_t>(k % 90)]; };
    NormalizedExample ex;
    ex.context = {cw(i * 7) + " " + cw(i * 11 + 1) + " " + cw(i * 13 + 2) + " " +
                  cw(i * 17 + 3) + " " + cw(i + 5)};
    ex.response = rw(i * 5) + " " + rw(i * 7 + 1) + " " + rw(i * 11 + 2) + " " + rw(i * 13 + 3) +
                  " " + rw(i + 4);
    ex.emotion = std::string(emotion_names()[static_cast<std::size_t>(i % kNumEmotions)]);
    ex.conv_id = "toy:" + std::to_string(i);
    out.push_back(std::move(ex));
  }
  return out;
}

DialogueCounts write_dialogue_csvs(const std::filesystem::path& dir, int train_conversations,
                                   int valid_conversations, int test_conversations,
                                   std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  DialogueCounts counts;
  auto write_split = [&](const char* tag, int n) {
    std::ostringstream ss;
    ss << "conv_id,utterance_idx,context,prompt,speaker_idx,utterance\n";
    int listener_turns = 0;
    for (const auto& conv : build_conversations(tag, n, seed)) {
      const std::string emotion(emotion_names()[static_cast<std::size_t>(conv.emotion_id)]);
      const std::string prompt = csv_escape(conv.turns.front().text);
      for (const auto& turn : conv.turns) {
        ss << conv.id << "," << turn.utterance_idx << "," << emotion << "," << prompt << ","
           << ((turn.utterance_idx + 1) / 2) << "," << csv_escape(turn.text) << "\n";
        if (turn.utterance_idx % 2 == 0) ++listener_turns;
      }
    }
    atomic_write_file(dir / (std::string(tag) + ".csv"), ss.str());
    return listener_turns;
  };
  counts.train = write_split("train", train_conversations);
  counts.valid = write_split("valid", valid_conversations);
  counts.test = write_split("test", test_conversations);
  return counts;
}

std::vector<NormalizedExample> dialogue_split(const std::string& split_tag, int conversations,
                                              std::uint64_t seed) {
  std::vector<NormalizedExample> out;
  for (const auto& conv : build_conversations(split_tag, conversations, seed)) {
    std::vector<std::string> history;
    for (const auto& turn : conv.turns) {
      if (turn.utterance_idx % 2 == 0) {
        NormalizedExample ex;
        ex.context = history;
        ex.response = join_tokens(tokenize(turn.text));
        ex.emotion = std::string(emotion_names()[static_cast<std::size_t>(conv.emotion_id)]);
        ex.conv_id = conv.id;
        out.push_back(std::move(ex));
      }
      history.push_back(join_tokens(tokenize(turn.text)));
    }
  }
  return out;
}

}  // namespace emphi::fixtures
