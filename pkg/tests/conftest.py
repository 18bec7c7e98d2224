
import pytest

from pbsmt.corpus import Corpus, SentencePair


# Six reference pairs covering length differences 0, 1-3 and 4-5.
LENGTH_EXAMPLES = [
    ("tamam mahsulat hamel shodeh 100% bazorsi mi shvand.",
     "bheje gae sabhee utpaad 100 nireekshan kie jaate hain."),
    ("baraye etlaat bishtar lotfa ba ma tamas begirid",
     "adhik jaanakaaree ke lie krpaya hamase sampark karen"),
    ("akharin ghimet sakeh ve tala dar bazar.",
     "baajaar par naveenatam sikka aur sone kee keematen."),
    ("Har zemestān bahāri dar pay dārad.",
     "Har sardī ke baad vasant ṛtu hotī hai."),
    ("pish bini ab ve npava dar litvania.",
     "Havāmāna andāja lithu'āniyā."),
    ("besiar sadeh baraye estefadeh.",
     "ka upayog karane ke lie bahut hee saral."),
]


def corpus_of(*pairs) -> Corpus:
    return Corpus(tuple(SentencePair(s, t) for s, t in pairs))


@pytest.fixture
def das_haus():
    return corpus_of(("das haus", "the house"), ("das buch", "the book"))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
