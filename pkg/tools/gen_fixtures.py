#!/usr/bin/env python3
"""Regenerate the bundled fixture corpus under src/softassets/fixtures/.

The corpus is closed-world by construction: gold spans are located with
plain byte-level substring search over the parsed document bodies, then the
script verifies that the extractor reproduces the gold exactly (micro F1
1.0) before anything is written.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from softassets.docmodel import from_plaintext, from_tei
from softassets.extract import Component, Gazetteer, evaluate, extract_mentions

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "softassets" / "fixtures"

GAZETTEER_TSV = """\
SPSS\t\thttps://www.ibm.com/spss\tIBM
R\t\thttps://www.r-project.org\tR Core Team
NumPy\tnumpy\thttps://numpy.org\tNumFOCUS
SciPy\tscipy\thttps://scipy.org\tNumFOCUS
MATLAB\tMatlab\thttps://www.mathworks.com\tMathWorks
Stata\t\thttps://www.stata.com\tStataCorp
GraphPad Prism\t\thttps://www.graphpad.com\tGraphPad Software
ImageJ\t\thttps://imagej.net\tNIH
TensorFlow\t\thttps://www.tensorflow.org\tGoogle
scikit-learn\tsklearn\thttps://scikit-learn.org\t
"""

CATALOG_TSV = """\
NumPy\thttps://numpy.org\tNumFOCUS
SciPy\thttps://scipy.org\tNumFOCUS
R\thttps://www.r-project.org\tR Core Team
TensorFlow\thttps://www.tensorflow.org\tGoogle
"""

N = Component.SOFTWARE_NAME.value
V = Component.VERSION.value
P = Component.PUBLISHER.value
U = Component.URL.value

# doc_id -> (format, paragraphs, bibl entries, gold (component, substring) pairs)
DOCS = {
    "doc01": (
        "tei",
        [
            "We used SPSS version 21 for the statistical analysis.",
            "Analysis scripts were archived alongside the data.",
        ],
        [],
        [(N, "SPSS"), (V, "21")],
    ),
    "doc02": (
        "tei",
        [
            "All figures were produced with GraphPad Prism.",
            "Participants gave informed consent.",
        ],
        [],
        [(N, "GraphPad Prism")],
    ),
    "doc03": (
        "tei",
        [
            "Data were analysed using the R software environment [1].",
            "Sensitivity checks confirmed the estimates.",
        ],
        ["R Core Team. A language for statistical computing. 2023."],
        [(N, "R")],
    ),
    "doc04": (
        "tei",
        [
            "Image processing relied on ImageJ and custom macros.",
            "Segmentation thresholds were fixed a priori.",
        ],
        [],
        [(N, "ImageJ")],
    ),
    "doc05": (
        "txt",
        [
            "Numerical analysis used NumPy (https://numpy.org) maintained by NumFOCUS.",
            "Scientific computing also involved SciPy version 1.11 as a core tool.",
        ],
        [],
        [(N, "NumPy"), (U, "https://numpy.org"), (P, "NumFOCUS"), (N, "SciPy"), (V, "1.11")],
    ),
    "doc06": (
        "txt",
        ["Statistical tests ran in Stata 17 with default settings."],
        [],
        [(N, "Stata"), (V, "17")],
    ),
    "doc07": (
        "txt",
        ["The MATLAB toolbox computed eigenvalues for every model."],
        [],
        [(N, "MATLAB")],
    ),
    "doc08": (
        "tei",
        [
            "Machine learning pipelines were implemented in TensorFlow.",
            "Hyperparameters follow the published defaults.",
        ],
        [],
        [(N, "TensorFlow")],
    ),
    "doc09": (
        "txt",
        ["Clustering used scikit-learn and its KMeans routines."],
        [],
        [(N, "scikit-learn")],
    ),
    "doc10": (
        "tei",
        [
            "Survey data were processed with SPSS software from IBM.",
            "Missing values were imputed before modelling.",
        ],
        [],
        [(N, "SPSS"), (P, "IBM")],
    ),
    "doc11": (
        "txt",
        ["We fitted mixed models in R version 4.3 for reproducibility."],
        [],
        [(N, "R"), (V, "4.3")],
    ),
    "doc12": (
        "txt",
        ["Plots came from MATLAB scripts converted by hand."],
        [],
        [(N, "MATLAB")],
    ),
    "doc13": (
        "tei",
        [
            "Gene counts were normalised with the SciPy package.",
            "Raw reads are available on request.",
        ],
        [],
        [(N, "SciPy")],
    ),
    "doc14": (
        "txt",
        ["GraphPad Prism generated the survival curves shown here."],
        [],
        [(N, "GraphPad Prism")],
    ),
    "doc15": (
        "txt",
        ["Simulations were implemented in NumPy using vectorised kernels."],
        [],
        [(N, "NumPy")],
    ),
    # zero-mention documents: the corpus keeps negative examples first-class
    "doc16": (
        "txt",
        ["The cohort was recruited from three outpatient clinics.", "Follow-up lasted two years."],
        [],
        [],
    ),
    "doc17": (
        "txt",
        ["Interviews were transcribed and coded thematically.", "Themes were reviewed by both raters."],
        [],
        [],
    ),
    "doc18": (
        "tei",
        ["Soil samples were collected at dawn.", "Sites were randomised across plots."],
        [],
        [],
    ),
    "doc19": (
        "txt",
        ["The questionnaire covered dietary habits.", "Responses were anonymised before review."],
        [],
        [],
    ),
    "doc20": (
        "tei",
        ["Archival sources were consulted in situ.", "Provenance was established from catalogues."],
        [],
        [],
    ),
    # extra documents harvested by the demo but outside the gold corpus
    "doc21": ("txt", ["Follow-up analysis reused SPSS version 21 consistently."], [], None),
    "doc22": ("txt", ["Further work used NumPy (https://numpy.org) for speed."], [], None),
    "doc23": ("txt", ["Validation models ran in R as described earlier."], [], None),
    "doc24": ("txt", ["The imaging workflow again used ImageJ throughout."], [], None),
    "doc25": ("txt", ["No software beyond standard spreadsheets was required."], [], None),
}

GOLD_DOC_IDS = [f"doc{i:02d}" for i in range(1, 21)]

CREATORS = [
    "Ada Lovelace",
    "Grace Hopper",
    "Alan Turing",
    "Katherine Johnson",
    "Edsger Dijkstra",
]

TEI_TEMPLATE = """<?xml version="1.0" encoding="UTF-8"?>
<TEI xmlns="http://www.tei-c.org/ns/1.0">
  <teiHeader><fileDesc><titleStmt><title>{title}</title></titleStmt></fileDesc></teiHeader>
  <text><body>
{paragraphs}
{bibl}
  </body></text>
</TEI>
"""


def render_tei(title: str, paragraphs: list[str], bibl_entries: list[str]) -> str:
    paras = "\n".join(f"    <div><p>{p}</p></div>" for p in paragraphs)
    bibl = ""
    if bibl_entries:
        rows = "\n".join(
            f'      <bibl xml:id="{i + 1}">{text}</bibl>' for i, text in enumerate(bibl_entries)
        )
        bibl = f"    <listBibl>\n{rows}\n    </listBibl>"
    return TEI_TEMPLATE.format(title=title, paragraphs=paras, bibl=bibl)


def doc_filename(doc_id: str, fmt: str) -> str:
    return f"{doc_id}.tei.xml" if fmt == "tei" else f"{doc_id}.txt"


def title_for(doc_id: str) -> str:
    return f"Study {doc_id[-2:]}: methods and materials"


def build_documents():
    (FIXTURES / "docs").mkdir(parents=True, exist_ok=True)
    parsed = {}
    for doc_id, (fmt, paragraphs, bibl, _) in DOCS.items():
        if fmt == "tei":
            raw = render_tei(title_for(doc_id), paragraphs, bibl)
            (FIXTURES / "docs" / doc_filename(doc_id, fmt)).write_text(raw, encoding="utf-8")
            parsed[doc_id] = from_tei(raw.encode("utf-8"), doc_id)
        else:
            raw = "\n\n".join(paragraphs)
            (FIXTURES / "docs" / doc_filename(doc_id, fmt)).write_text(raw, encoding="utf-8")
            parsed[doc_id] = from_plaintext(raw, doc_id)
    return parsed


def locate_gold(parsed):
    """Byte-level substring search, consuming occurrences left to right."""
    gold = []
    for doc_id in GOLD_DOC_IDS:
        spec = DOCS[doc_id][3]
        body = parsed[doc_id].body.encode("utf-8")
        cursor = {}
        for component, surface in spec:
            needle = surface.encode("utf-8")
            start = body.index(needle, cursor.get(surface, 0))
            cursor[surface] = start + len(needle)
            gold.append(
                {
                    "doc_id": doc_id,
                    "component": component,
                    "start_byte": start,
                    "end_byte": start + len(needle),
                    "surface": surface,
                }
            )
    return gold


def verify_closed_world(parsed, gold):
    from softassets.extract import SoftwareMention, load_gold_jsonl

    gaz = Gazetteer.from_tsv(GAZETTEER_TSV)
    predicted = []
    for doc_id in GOLD_DOC_IDS:
        predicted.extend(extract_mentions(parsed[doc_id], gaz))
    gold_mentions = load_gold_jsonl("\n".join(json.dumps(g) for g in gold))
    report = evaluate(predicted, gold_mentions, doc_ids=GOLD_DOC_IDS)
    if report.micro.f1 != 1.0:
        pred_keys = {(m.doc_id, m.component.value, m.span.start_byte, m.span.end_byte) for m in predicted}
        gold_keys = {(m.doc_id, m.component.value, m.span.start_byte, m.span.end_byte) for m in gold_mentions}
        raise SystemExit(
            "closed-world check failed\n"
            f"  false positives: {sorted(pred_keys - gold_keys)}\n"
            f"  false negatives: {sorted(gold_keys - pred_keys)}"
        )
    assert report.docs_total == 20 and report.docs_zero_mention == 5


OAI_PAGE = """<?xml version="1.0" encoding="UTF-8"?>
<OAI-PMH xmlns="http://www.openarchives.org/OAI/2.0/">
  <responseDate>2024-05-02T00:00:00Z</responseDate>
  <request verb="ListRecords" metadataPrefix="oai_dc">http://fixture.invalid/oai</request>
  <ListRecords>
{records}
    {token}
  </ListRecords>
</OAI-PMH>
"""

RECORD = """    <record>
      <header>
        <identifier>oai:fixture.invalid:{doc_id}</identifier>
        <datestamp>2024-05-01</datestamp>
      </header>
      <metadata>
        <oai_dc:dc xmlns:oai_dc="http://www.openarchives.org/OAI/2.0/oai_dc/"
                   xmlns:dc="http://purl.org/dc/elements/1.1/">
          <dc:title>{title}</dc:title>
          <dc:creator>{creator}</dc:creator>
          <dc:identifier>https://doi.org/10.5555/fixture.{doc_id}</dc:identifier>
          <dc:identifier>http://fixture.invalid/docs/{filename}</dc:identifier>
          <dc:date>2024-05-01</dc:date>
        </oai_dc:dc>
      </metadata>
    </record>"""


def build_oai_pages():
    (FIXTURES / "oai").mkdir(parents=True, exist_ok=True)
    doc_ids = list(DOCS)
    pages = [doc_ids[0:10], doc_ids[10:20], doc_ids[20:25]]
    tokens = [
        '<resumptionToken completeListSize="25" cursor="0">page2</resumptionToken>',
        '<resumptionToken completeListSize="25" cursor="10">page3</resumptionToken>',
        "<resumptionToken/>",
    ]
    for page_no, (ids, token) in enumerate(zip(pages, tokens), start=1):
        records = "\n".join(
            RECORD.format(
                doc_id=doc_id,
                title=title_for(doc_id),
                creator=CREATORS[i % len(CREATORS)],
                filename=doc_filename(doc_id, DOCS[doc_id][0]),
            )
            for i, doc_id in enumerate(ids)
        )
        (FIXTURES / "oai" / f"page{page_no}.xml").write_text(
            OAI_PAGE.format(records=records, token=token), encoding="utf-8"
        )


def main():
    FIXTURES.mkdir(parents=True, exist_ok=True)
    parsed = build_documents()
    gold = locate_gold(parsed)
    verify_closed_world(parsed, gold)
    (FIXTURES / "gazetteer.tsv").write_text(GAZETTEER_TSV, encoding="utf-8")
    (FIXTURES / "catalog.tsv").write_text(CATALOG_TSV, encoding="utf-8")
    (FIXTURES / "gold.jsonl").write_text(
        "".join(json.dumps(g, ensure_ascii=False) + "\n" for g in gold), encoding="utf-8"
    )
    (FIXTURES / "gold_manifest.json").write_text(
        json.dumps({"doc_ids": GOLD_DOC_IDS, "zero_mention": GOLD_DOC_IDS[15:]}, indent=2)
        + "\n",
        encoding="utf-8",
    )
    build_oai_pages()
    print(f"fixtures written to {FIXTURES} ({len(gold)} gold mentions)")


if __name__ == "__main__":
    main()
