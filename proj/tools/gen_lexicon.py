#!/usr/bin/env python3
# Copyright 2026 The KVQG Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Regenerates data/lexicon.tsv and data/singular_exceptions.tsv.

The lexicon covers aerial/remote-sensing caption and question vocabulary.
Nouns get their plural forms, verbs their regular inflections (with the base
form as lemma). Output is sorted so regeneration is byte-stable.
"""

import pathlib
import sys

NOUNS = """
airplane aeroplane plane jet aircraft airport airfield runway taxiway apron tarmac terminal
hangar helicopter helipad control tower boat ship vessel yacht sailboat ferry canoe kayak
cargo container crane dock pier wharf harbor harbour port marina jetty breakwater bridge
viaduct overpass road street highway freeway motorway avenue lane path trail track railway
railroad rail train station platform car truck bus van vehicle bicycle bike motorcycle
traffic intersection roundabout junction crossing crosswalk sidewalk pavement parking lot
garage building house home apartment residence villa cottage cabin hut shed barn warehouse
factory plant mill refinery tank silo chimney tower skyscraper office hotel hospital school
church chapel prayer worship temple mosque cathedral palace castle stadium arena court field pitch playground
park garden lawn yard fence wall gate roof rooftop window door square plaza fountain
statue monument pool swimming lake pond river stream creek canal channel ditch reservoir dam
sea ocean bay beach shore coast coastline island peninsula cliff wave water waters sand
dune desert mountain hill hillside slope valley ridge peak rock stone gravel soil mud earth
ground land farmland cropland crop wheat corn rice grass meadow pasture prairie grassland
forest woodland wood tree bush shrub vegetation plant flower leaf branch trunk root
orchard vineyard greenhouse farm farmhouse field circle circular irrigation terrace
snow ice glacier cloud sky sun shadow shade light fog smoke fire
city town village suburb district neighborhood neighbourhood community area region zone
block row line side edge corner center centre middle part top bottom left right front back
image picture photo scene view place location spot site object thing kind type shape size
color colour pattern number lot group cluster set pair couple dozen bunch array
people person man woman child crowd player worker tourist
animal cow cattle sheep horse bird dog
ground runway stadium track court tennis basketball baseball football soccer golf course
playground pitch
storage oil gas fuel energy power electricity solar panel wind turbine windmill pylon cable
pipe pipeline wire pole post tower antenna
freight shipping transport transportation travel trip journey passenger goods
food fruit vegetable grain animal fish
commerce business trade market shop store mall supermarket restaurant
recreation leisure sport sports exercise game match race swim swimming surfing fishing
sailing boating climbing hiking camping picnic relaxation rest sleep
purpose use function reason cause effect result
house roof material steel iron metal concrete cement brick glass wood wooden plastic
asphalt tar rubber paper cloth
water rain flood drought storm weather climate season summer winter spring autumn
day night morning evening time year
structure facility infrastructure construction industry agriculture
residential commercial industrial
interchange ramp exit entrance lane lanes
airline pilot flight takeoff landing
ship container terminal berth quay
wetland marsh swamp lagoon delta estuary
mountain range plateau canyon gorge
desert oasis
church steeple
tank tanks
playground
baseball diamond
tennis court
soccer field
swimming pool
dense density sparse
rest stop
frame
arrangement
distance
surface
ring
loop
curve
edge
boundary
border
neighbor
neighbour
surroundings
environment
landscape
terrain
countryside
outskirts
""".split()

# Plurals not derivable by the regular rules, plus uncountables that look plural.
IRREGULAR_PLURALS = {
    "person": "people", "man": "men", "woman": "women", "child": "children",
    "leaf": "leaves", "shelf": "shelves", "wolf": "wolves", "life": "lives",
    "knife": "knives", "wife": "wives", "half": "halves", "foot": "feet",
    "tooth": "teeth", "mouse": "mice", "goose": "geese", "sheep": "sheep",
    "fish": "fish", "deer": "deer", "cattle": "cattle", "aircraft": "aircraft",
    "series": "series", "species": "species",
}

EXCEPTIONS = {
    # plural -> singular where the rule table would be wrong
    "buses": "bus", "glasses": "glass", "gases": "gas", "canvases": "canvas",
    "leaves": "leaf", "shelves": "shelf", "wolves": "wolf", "lives": "life",
    "knives": "knife", "wives": "wife", "halves": "half", "people": "person",
    "men": "man", "women": "woman", "children": "child", "feet": "foot",
    "teeth": "tooth", "mice": "mouse", "geese": "goose", "series": "series",
    "species": "species", "news": "news", "goods": "goods", "sports": "sports",
    "houses": "house", "warehouses": "warehouse", "greenhouses": "greenhouse",
    "farmhouses": "farmhouse", "courses": "course", "horses": "horse",
    "purposes": "purpose", "bases": "base", "cases": "case", "phases": "phase",
    "vases": "vase", "oases": "oasis", "analyses": "analysis", "crises": "crisis",
    "movies": "movie", "cookies": "cookie", "ties": "tie", "pies": "pie",
    "lies": "lie", "dies": "die", "shoes": "shoe", "canoes": "canoe",
    "toes": "toe", "avenues": "avenue", "blues": "blue", "lens": "lens",
    "bus": "bus", "gas": "gas", "grass": "grass", "glass": "glass",
    "waters": "water", "woods": "wood", "surroundings": "surroundings",
    "outskirts": "outskirts", "trees": "tree", "lanes": "lane",
}

VERBS = """
park stand lie sit float sail fly land take leave arrive depart travel move drive run
walk stop wait cross cover surround border line locate situate place build construct
design create make use connect link join lead pass flow extend stretch spread grow plant
harvest irrigate cultivate farm fish swim play watch see look show contain include hold
store carry transport ship load unload dock anchor moor berth taxi launch
provide offer serve protect shade shelter block prevent cause help allow support supply
produce generate need require want desire like enjoy visit live stay work rest relax
climb hike camp surf sail row paddle dive
separate divide distribute arrange scatter cluster gather crowd fill occupy
reflect shine glow burn melt freeze rain snow
feed water wash clean dry heat cool
exist appear seem remain become
call name define describe
receive give get keep put set bring send
ask answer know think believe
happen occur
paint color
fence wall pave
dot
""".split()

IRREGULAR_VERBS = {
    "be": ["is", "are", "was", "were", "been", "being", "am", "be"],
    "have": ["has", "had", "having", "have"],
    "do": ["does", "did", "done", "doing", "do"],
    "go": ["goes", "went", "gone", "going", "go"],
    "stand": ["stood"],
    "lie": ["lay", "lain", "lying"],
    "sit": ["sat", "sitting"],
    "fly": ["flew", "flown", "flies", "flying"],
    "take": ["took", "taken"],
    "leave": ["left"],
    "run": ["ran", "running"],
    "build": ["built"],
    "make": ["made"],
    "lead": ["led"],
    "grow": ["grew", "grown"],
    "see": ["saw", "seen"],
    "hold": ["held"],
    "spread": ["spreads", "spreading"],
    "keep": ["kept"],
    "bring": ["brought"],
    "send": ["sent"],
    "give": ["gave", "given"],
    "get": ["got", "gotten", "getting"],
    "put": ["putting"],
    "set": ["setting"],
    "know": ["knew", "known"],
    "think": ["thought"],
    "swim": ["swam", "swum"],
    "drive": ["drove", "driven"],
    "freeze": ["froze", "frozen"],
    "shine": ["shone"],
    "burn": ["burnt"],
}

ADJECTIVES = """
large big huge enormous giant great small little tiny long short tall high low wide
narrow broad thin thick deep shallow flat steep round square rectangular circular
curved straight oval triangular regular irregular neat tidy orderly messy dense sparse
many few several numerous various different same other similar new old modern ancient
green blue red white black gray grey brown yellow orange purple pink dark light bright
pale golden silver colorful colourful clear clean dirty muddy sandy rocky grassy
wooded forested snowy icy frozen dry wet green lush barren bare empty full busy crowded
quiet calm peaceful beautiful pretty nice lovely ugly natural artificial open closed
residential commercial industrial agricultural urban rural coastal inland central
main major minor public private local nearby near far distant close adjacent parallel
vertical horizontal diagonal north south east west northern southern eastern western
important useful necessary common usual typical popular famous special
fast slow heavy light strong weak hot cold warm cool sunny cloudy rainy windy
free safe dangerous
whole entire half
favorite
""".split()

NUMS = """
one two three four five six seven eight nine ten eleven twelve thirteen fourteen fifteen
sixteen seventeen eighteen nineteen twenty thirty forty fifty hundred hundreds thousand
thousands dozens million first second third
""".split()

DETS = """
a an the this that these those some any each every no another either neither
its their his her our your my both all much more most less least such
""".split()

OTHER = """
can could will would shall should may might must
i you he she it we they me him us them myself itself themselves
what which who whom whose where when why how whether
in on at by for with without within from to into onto of off over under above below
beneath between among around about across along through throughout toward towards
near beside besides behind before after during since until against upon beyond inside
outside next
and or but nor so yet if because although though while than as
not very too also just only even still already almost quite rather really always never
often sometimes usually there here then now together away up down out
yes well again
""".split()


def regular_plural(noun: str) -> str:
    if noun in IRREGULAR_PLURALS:
        return IRREGULAR_PLURALS[noun]
    if noun.endswith(("s", "x", "z", "ch", "sh")):
        return noun + "es"
    if noun.endswith("y") and len(noun) > 1 and noun[-2] not in "aeiou":
        return noun[:-1] + "ies"
    return noun + "s"


def verb_forms(verb: str):
    forms = set()
    if verb.endswith(("s", "x", "z", "ch", "sh", "o")):
        forms.add(verb + "es")
    elif verb.endswith("y") and verb[-2] not in "aeiou":
        forms.add(verb[:-1] + "ies")
    else:
        forms.add(verb + "s")
    if verb.endswith("e"):
        forms.add(verb + "d")
        forms.add(verb[:-1] + "ing")
    elif verb.endswith("y") and verb[-2] not in "aeiou":
        forms.add(verb[:-1] + "ied")
        forms.add(verb + "ing")
    else:
        forms.add(verb + "ed")
        forms.add(verb + "ing")
    return forms


def main(root: pathlib.Path) -> None:
    entries = {}

    def put(word, tag, lemma=""):
        # First assignment wins so earlier, more specific classes take priority.
        entries.setdefault(word, (tag, lemma))

    for w in OTHER:
        put(w, "OTHER")
    for w in DETS:
        put(w, "DET")
    for w in NUMS:
        put(w, "NUM")
    for lemma, forms in IRREGULAR_VERBS.items():
        for f in forms:
            put(f, "VERB", lemma)
    for w in ADJECTIVES:
        put(w, "ADJ")
    for w in NOUNS:
        put(w, "NOUN")
        plural = regular_plural(w)
        if plural != w:
            put(plural, "NOUN", w)
    for v in VERBS:
        put(v, "VERB", v)
        for f in sorted(verb_forms(v)):
            put(f, "VERB", v)

    data = root / "data"
    with open(data / "lexicon.tsv", "w", encoding="utf-8") as out:
        out.write("# word<TAB>TAG[<TAB>lemma]; generated by tools/gen_lexicon.py\n")
        for word in sorted(entries):
            tag, lemma = entries[word]
            out.write(f"{word}\t{tag}\t{lemma}\n" if lemma and lemma != word
                      else f"{word}\t{tag}\n")
    with open(data / "singular_exceptions.tsv", "w", encoding="utf-8") as out:
        out.write("# plural<TAB>singular; generated by tools/gen_lexicon.py\n")
        for plural in sorted(EXCEPTIONS):
            out.write(f"{plural}\t{EXCEPTIONS[plural]}\n")
    print(f"{len(entries)} lexicon entries, {len(EXCEPTIONS)} exceptions")


if __name__ == "__main__":
    main(pathlib.Path(sys.argv[1]) if len(sys.argv) > 1 else
         pathlib.Path(__file__).resolve().parent.parent)
