#include "doctest.h"

#include "grapeqa/text.hpp"

using namespace grapeqa;

TEST_CASE("tokenize lowercases and splits on ASCII punctuation") {
  auto t = tokenize("  Guitar-Pick, 2 Strings!");
  REQUIRE(t.size() == 4);
  CHECK(t[0].text == "guitar");
  CHECK(t[1].text == "pick");
  CHECK(t[2].text == "2");
  CHECK(t[3].text == "strings");
  CHECK(t[0].start == 2);
  CHECK(t[0].end == 8);
  CHECK(t[3].start == 17);
}

TEST_CASE("non-ASCII bytes stay inside tokens") {
  auto t = tokenize("caf\xc3\xa9 au lait");
  REQUIRE(t.size() == 3);
  CHECK(t[0].text == "caf\xc3\xa9");
}

TEST_CASE("normalize and context text") {
  CHECK(normalize("The  Sun.") == "the sun");
  CHECK(normalize("!!!").empty());
  CHECK(context_text("why?", "because") == "why? because");
  CHECK(trim("  a b \n") == "a b");
}

TEST_CASE("fnv1a matches the published 64-bit test vectors") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
  CHECK(fnv1a("a", 1) != fnv1a("a"));
}
