"""Synthetic climate-misinformation corpus generation.

Builds seeded, label-themed datasets with the same label distribution as the
published FLICC corpus, for offline experimentation and end-to-end pipeline
runs on machines without access to the original data. Texts are templated per
fallacy with shared climate vocabulary across labels, so the task is learnable
but not trivially separable.
"""

from __future__ import annotations

import itertools
import random

from .corpus import Dataset, bundled_deconstructions, dataset_from_records
from .taxonomy import canonical_names

# Label distribution of the published FLICC corpus (2509 samples).
REFERENCE_LABEL_TOTALS = {
    "ad hominem": 368,
    "anecdote": 237,
    "cherry picking": 309,
    "conspiracy theory": 215,
    "fake experts": 63,
    "false choice": 68,
    "false equivalence": 74,
    "impossible expectations": 202,
    "misrepresentation": 211,
    "oversimplification": 199,
    "single cause": 315,
    "slothful induction": 248,
}

_PLACES = ["Texas", "Siberia", "Chicago", "the Midwest", "Alberta", "Bavaria", "Queensland",
           "the Dakotas", "Spain", "Norway", "Ohio", "the Highlands", "Patagonia", "Finland",
           "Montana", "the Alps"]
_MONTHS = ["January", "February", "March", "April", "May", "September", "October", "November",
           "December", "June"]
_YEARS = ["1998", "2002", "2005", "2007", "2009", "2011", "2012", "2014", "2016", "2018",
          "2019", "2021"]
_ORGS = ["the UN panel", "NASA", "NOAA", "the Met Office", "the EPA", "the IPCC",
         "the climate lobby", "the modelling centres", "the weather bureau", "the academies",
         "the satellite team", "the research councils"]
_GROUPS = ["alarmists", "green elites", "climate celebrities", "grant-funded academics",
           "Hollywood activists", "career bureaucrats", "doomsday politicians", "eco lobbyists",
           "the commentariat", "subsidy farmers", "conference regulars", "the green blob"]
_PERSONS = ["Al Gore", "a famous climate envoy", "the UN climate chief", "that TV scientist",
            "a jet-setting activist", "the movement's figurehead", "a celebrity campaigner",
            "the summit keynote speaker"]
_NUMBERS = ["900", "1,200", "17,000", "31,000", "4,500", "650", "2,400", "9,000"]
_PROFESSIONS = ["engineer", "geologist", "TV weatherman", "economist", "physician", "chemist",
                "mathematician", "surveyor"]
_SMALLPCT = ["0.03", "0.04", "0.038", "0.012", "0.06", "0.05"]

# Optional second sentence shared across labels; multiplies the space of
# unique texts without adding label signal.
_FILLERS = ["", "", "", " That is the plain truth.", " Everyone I talk to agrees.",
            " You will not hear this on the news.", " Think about it.",
            " The papers ignore this.", " Look it up yourself.", " Simple as that.",
            " And yet the subsidies keep flowing.", " But the panic continues."]

_TEMPLATES = {
    "ad hominem": [
        "Why listen to {group} on warming when they jet to conferences in {place}?",
        "{person} lectures us about carbon while heating a mansion in {place}, so the science he cites is garbage.",
        "The {group} pushing climate taxes in {year} just want research money, not truth.",
        "I'll take climate advice from {group} the day they give up their houses in {place}.",
        "{person} failed {profession} school, so his warming claims are worthless.",
        "Everything {org} says is suspect because its staff fly business class to {place}.",
    ],
    "anecdote": [
        "It snowed in {place} this {month}, so much for global warming.",
        "My town in {place} just had its coldest {month} since {year}; warming is a myth.",
        "Tell the farmers in {place} about heating, they scraped frost off the fields in {month}.",
        "We froze through {month} here in {place}, some climate crisis that is.",
        "Grandpa says winters in {place} were warmer in {year}, so nothing has changed.",
        "One walk outside in {place} this {month} refutes the warming scare.",
    ],
    "cherry picking": [
        "Since {year} the satellite record over {place} shows no warming at all.",
        "Global temperatures have been flat from {year} to {year2}, the pause is real.",
        "Sea ice around {place} grew this {month}, the melt story is over.",
        "Pick any station in {place}: {year} was hotter than last summer.",
        "The {month} data from {org} shows cooling if you start the graph at {year}.",
        "Glaciers near {place} advanced in {year}, so the ice is recovering.",
    ],
    "conspiracy theory": [
        "Scientists at {org} tampered with station data from {place} to manufacture a warming trend.",
        "The warming scare is a scheme by {org} to control energy and tax {place}.",
        "Leaked emails prove {group} colluded to silence dissent about the {year} record.",
        "{org} deletes inconvenient {month} readings; the whole record is fabricated.",
        "The {year} temperature spike was invented so {group} could push a world government.",
        "Follow the money: {org} pays for the answers it wants about {place}.",
    ],
    "fake experts": [
        "More than {number} scientists signed a petition in {year} rejecting the climate consensus.",
        "A retired {profession} from {place} has proven the greenhouse theory wrong.",
        "{number} professionals with science degrees dispute warming, where is the consensus?",
        "A Nobel laureate in another field told {org} it has the physics backwards.",
        "My neighbour, a {profession} for thirty years in {place}, says CO2 cannot warm anything.",
        "The {year} declaration signed by {number} graduates shows the debate is alive.",
    ],
    "false choice": [
        "Either the sun drives the climate of {place} or CO2 does, and solar cycles clearly matter.",
        "CO2 lagged temperature in the {year} ice cores, so warming drives CO2 and not the reverse.",
        "Climate has changed naturally or by us; the {year} records show natural swings, case closed.",
        "Either the models from {org} are perfect or they are useless for policy in {place}.",
        "Warming is either a catastrophe or a hoax, and {place} looks fine to me.",
        "If nature caused the ice ages before {year}, people cannot be causing change now.",
    ],
    "false equivalence": [
        "Climate science is just another religion, with {org} as its church.",
        "Today's warming scare sounds exactly like the {year} ice-age panic, same hysteria.",
        "Trusting {org} on climate is like trusting a horoscope from {place}.",
        "Carbon markets in {place} are the medieval sale of indulgences all over again.",
        "Model projections and tarot cards make the same kind of forecast for {year}.",
        "Being skeptical of {org} is no different from Galileo doubting the church in {year}.",
    ],
    "impossible expectations": [
        "Until the models predict every storm in {place}, we cannot act on their projections.",
        "{org} cannot forecast {month} weather a week out, yet we trust it for {year}?",
        "Call me when science explains every cold snap in {place}, then we can talk policy.",
        "One uncertain decimal in the {org} dataset from {year} and the whole case for action collapses.",
        "Unless a single treaty stops warming outright, cutting emissions in {place} is pointless.",
        "We need total certainty about the {year} climate of {place} before spending a cent.",
    ],
    "misrepresentation": [
        "CO2 is only {smallpct} percent of the air over {place}, far too thin to heat a planet.",
        "The greenhouse effect breaks the laws of thermodynamics, cold air cannot warm {place}.",
        "Scientists in {year} predicted an ice age, so they have simply flipped the story.",
        "{org} claims certainty, yet its own {year} report admits the models might be off.",
        "Warming stopped being 'global' when {place} had a cool {month}, the term is a dodge.",
        "A trace gas at {smallpct} percent cannot move the climate of {place}.",
    ],
    "oversimplification": [
        "More CO2 means greener crops in {place}, simple as that.",
        "Plants breathe CO2, so the emissions of {year} are nothing but free fertiliser.",
        "Warmer winters in {place} will save on heating, so warming is a net win.",
        "CO2 is plant food; the {year} greening around {place} proves emissions help the earth.",
        "A couple of degrees just means nicer {month} evenings in {place}.",
        "Deserts near {place} bloomed in {year} thanks to CO2, end of story.",
    ],
    "single cause": [
        "Climate changed naturally before {year}, so today's change in {place} is natural too.",
        "The sun alone controls the temperature of {place}; it always has.",
        "Volcanoes drove every ancient warm spell, including the one after {year}.",
        "It is the oceans that set the climate, not anything people do in {place}.",
        "The {year} El Nino explains the entire temperature rise measured in {place}.",
        "Earth's orbit caused the shifts before {year}, so orbit is what is warming {place} now.",
    ],
    "slothful induction": [
        "Sea levels near {place} creep up a hair each year; nothing points to acceleration.",
        "No measurable harm so far in {place}, the record shows business as usual.",
        "Storms in {month} are no worse than in {year}, there is nothing to explain.",
        "The climate of {place} looks ordinary to anyone who checks the {year} almanac.",
        "Decades of data from {org} on {place} and still no disaster, the alarm was empty.",
        "Crops in {place} keep growing, whatever the {year} reports claimed.",
    ],
}

_LABEL_CLAIMS = {
    "ad hominem": ["5.2"],
    "anecdote": ["1.3", "1.1"],
    "cherry picking": ["1.1", "1.3"],
    "conspiracy theory": ["5.3", "5.1"],
    "fake experts": ["5.1"],
    "false choice": ["2.3", "2.1"],
    "false equivalence": ["5.2"],
    "impossible expectations": ["4.2", "5.1"],
    "misrepresentation": ["2.3"],
    "oversimplification": ["3.3"],
    "single cause": ["2.1"],
    "slothful induction": ["1.6", "1.1"],
}

_SLOTS = {
    "place": _PLACES,
    "month": _MONTHS,
    "year": _YEARS,
    "year2": _YEARS,
    "org": _ORGS,
    "group": _GROUPS,
    "person": _PERSONS,
    "number": _NUMBERS,
    "profession": _PROFESSIONS,
    "smallpct": _SMALLPCT,
}


def _fill(template: str, rng: random.Random) -> str:
    out = template
    for slot, values in _SLOTS.items():
        token = "{" + slot + "}"
        while token in out:
            out = out.replace(token, rng.choice(values), 1)
    return out + rng.choice(_FILLERS)


def synthetic_corpus(
    label_counts: dict[str, int] | None = None,
    seed: int = 0,
    include_bundled: bool = True,
    claim_rate: float = 0.8,
) -> Dataset:
    """Generate a seeded synthetic dataset with the given per-label sizes
    (defaults to the published corpus distribution). With ``include_bundled``
    the 12 worked deconstruction examples count toward their labels."""
    if label_counts is None:
        label_counts = dict(REFERENCE_LABEL_TOTALS)
    rng = random.Random(seed)
    bundled = {s.label.canonical_name: s for s in bundled_deconstructions()} if include_bundled else {}

    records = []
    for label in canonical_names():
        count = label_counts.get(label, 0)
        if count <= 0:
            continue
        texts_seen = set()
        slug = label.replace(" ", "-")
        if label in bundled and count > 0:
            sample = bundled[label]
            records.append(sample.to_record())
            texts_seen.add(sample.text)
        template_cycle = itertools.cycle(_TEMPLATES[label])
        i = 0
        attempts = 0
        while len(texts_seen) < count:
            attempts += 1
            if attempts > 200 * count:
                raise ValueError(
                    f"cannot generate {count} unique texts for {label!r}; "
                    "template space exhausted"
                )
            text = _fill(next(template_cycle), rng)
            if text in texts_seen:
                continue
            texts_seen.add(text)
            rec = {"id": f"synth-{slug}-{i:04d}", "text": text, "label": label}
            if rng.random() < claim_rate:
                rec["claim"] = rng.choice(_LABEL_CLAIMS[label])
            records.append(rec)
            i += 1
    return dataset_from_records(records, provenance=f"synthetic corpus (seed {seed})")


def vocabulary_texts() -> list[str]:
    """Every template and slot value, for seeding a checkpoint vocabulary
    that fully covers generated corpora."""
    texts = [t for bank in _TEMPLATES.values() for t in bank]
    texts += [" ".join(values) for values in _SLOTS.values()]
    texts += [f for f in _FILLERS if f]
    return texts


def balanced_subset(dataset: Dataset, size: int) -> Dataset:
    """First-k-per-label subset with sizes as balanced as the label count
    allows; earlier samples within each label win."""
    labels = [l for l, group in dataset.by_label().items() if group]
    base, extra = divmod(size, len(labels))
    picked = []
    groups = dataset.by_label()
    for i, label in enumerate(labels):
        want = base + (1 if i < extra else 0)
        group = groups[label]
        if len(group) < want:
            raise ValueError(f"label {label!r} has only {len(group)} samples, need {want}")
        picked.extend(group[:want])
    order = {s.id: k for k, s in enumerate(dataset.samples)}
    picked.sort(key=lambda s: order[s.id])
    return Dataset(samples=tuple(picked), provenance=dataset.provenance + f" (subset {size})")
