"""Research-software asset pipeline.

Harvests scholarly records over OAI-PMH, extracts software mentions from
full text, clusters them into asset candidates, routes them through
manager/author validation, mints Software Heritage identifiers, and
exposes paper-software links over OAI-PMH and Signposting.
"""

__version__ = "0.1.0"
