"""Double Metaphone phonetic encoding for name matching.

Implements Lawrence Philips' Double Metaphone algorithm: every word maps to a
primary code and a secondary (alternate-pronunciation) code. Name-level
matching in the resolver uses the primary code truncated to the classic
four-character length, which is what makes prefix-sharing name variants
("lalu prasad" / "lalu prasad yadav") agree phonetically.
"""

from __future__ import annotations

_VOWELS = frozenset("AEIOUY")
_SILENT_STARTERS = ("GN", "KN", "PN", "WR", "PS")

#: Classic Double Metaphone code length.
DEFAULT_CODE_LENGTH = 4


def double_metaphone(value: str) -> tuple[str, str]:
    """Return the (primary, secondary) Double Metaphone codes of ``value``.

    The secondary code equals the primary when the word has no alternate
    pronunciation. Non-alphabetic characters are skipped by the algorithm's
    normal letter handling. Codes are untruncated.
    """
    st = value.upper()
    slavo_germanic = (
        "W" in st or "K" in st or "CZ" in st or "WITZ" in st
    )
    # Two guard chars in front and five trailing spaces let every rule index
    # freely without negative-slice wraparound.
    first = 2
    st = "-" * first + st + " " * 5
    last = first + len(value) - 1
    pos = first
    pri = ""
    sec = ""

    if st[first : first + 2] in _SILENT_STARTERS:
        pos += 1
    if st[first] == "X":  # initial X sounds like Z, coded S
        pri += "S"
        sec += "S"
        pos += 1

    while pos <= last:
        ch = st[pos]
        # nxt = (primary_add, advance) or (primary_add, secondary_add, advance);
        # None adds nothing to either code.
        nxt: tuple = (None, 1)
        if ch in _VOWELS:
            if pos == first:  # initial vowels all code to A
                nxt = ("A", 1)
        elif ch == "B":
            nxt = ("P", 2) if st[pos + 1] == "B" else ("P", 1)
        elif ch == "C":
            if (
                pos > first + 1
                and st[pos - 2] not in _VOWELS
                and st[pos - 1 : pos + 2] == "ACH"
                and (
                    st[pos + 2] not in ("I", "E")
                    or st[pos - 2 : pos + 4] in ("BACHER", "MACHER")
                )
            ):
                nxt = ("K", 2)
            elif pos == first and st[first : first + 6] == "CAESAR":
                nxt = ("S", 2)
            elif st[pos : pos + 4] == "CHIA":
                nxt = ("K", 2)
            elif st[pos : pos + 2] == "CH":
                if pos > first and st[pos : pos + 4] == "CHAE":
                    nxt = ("K", "X", 2)
                elif (
                    pos == first
                    and (
                        st[pos + 1 : pos + 6] in ("HARAC", "HARIS")
                        or st[pos + 1 : pos + 4] in ("HOR", "HYM", "HIA", "HEM")
                    )
                    and st[first : first + 5] != "CHORE"
                ):
                    nxt = ("K", 2)
                elif (
                    st[first : first + 4] in ("VAN ", "VON ")
                    or st[first : first + 3] == "SCH"
                    or st[pos - 2 : pos + 4] in ("ORCHES", "ARCHIT", "ORCHID")
                    or st[pos + 2] in ("T", "S")
                    or (
                        (st[pos - 1] in ("A", "O", "U", "E") or pos == first)
                        and st[pos + 2] in ("L", "R", "N", "M", "B", "H", "F", "V", "W", " ")
                    )
                ):
                    nxt = ("K", 1)
                elif pos > first:
                    if st[first : first + 2] == "MC":
                        nxt = ("K", 2)
                    else:
                        nxt = ("X", "K", 2)
                else:
                    nxt = ("X", 2)
            elif st[pos : pos + 2] == "CZ" and st[pos - 2 : pos + 2] != "WICZ":
                nxt = ("S", "X", 2)
            elif st[pos + 1 : pos + 4] == "CIA":
                nxt = ("X", 3)
            elif st[pos : pos + 2] == "CC" and not (pos == first + 1 and st[first] == "M"):
                if st[pos + 2] in ("I", "E", "H") and st[pos + 2 : pos + 4] != "HU":
                    if (pos == first + 1 and st[first] == "A") or st[
                        pos - 1 : pos + 4
                    ] in ("UCCEE", "UCCES"):
                        nxt = ("KS", 3)
                    else:
                        nxt = ("X", 3)
                else:
                    nxt = ("K", 2)
            elif st[pos : pos + 2] in ("CK", "CG", "CQ"):
                nxt = ("K", 2)
            elif st[pos : pos + 2] in ("CI", "CE", "CY"):
                if st[pos : pos + 3] in ("CIO", "CIE", "CIA"):
                    nxt = ("S", "X", 2)
                else:
                    nxt = ("S", 2)
            elif st[pos + 1 : pos + 3] in (" C", " Q", " G"):
                nxt = ("K", 3)
            elif st[pos + 1] in ("C", "K", "Q") and st[pos + 1 : pos + 3] not in ("CE", "CI"):
                nxt = ("K", 2)
            else:
                nxt = ("K", 1)
        elif ch == "D":
            if st[pos : pos + 2] == "DG":
                if st[pos + 2] in ("I", "E", "Y"):
                    nxt = ("J", 3)
                else:
                    nxt = ("TK", 2)
            elif st[pos : pos + 2] in ("DT", "DD"):
                nxt = ("T", 2)
            else:
                nxt = ("T", 1)
        elif ch == "F":
            nxt = ("F", 2) if st[pos + 1] == "F" else ("F", 1)
        elif ch == "G":
            if st[pos + 1] == "H":
                if pos > first and st[pos - 1] not in _VOWELS:
                    nxt = ("K", 2)
                elif pos < first + 3:
                    if pos == first:
                        if st[pos + 2] == "I":
                            nxt = ("J", 2)
                        else:
                            nxt = ("K", 2)
                elif (
                    (pos > first + 1 and st[pos - 2] in ("B", "H", "D"))
                    or (pos > first + 2 and st[pos - 3] in ("B", "H", "D"))
                    or (pos > first + 3 and st[pos - 4] in ("B", "H"))
                ):
                    nxt = (None, 2)
                elif (
                    pos > first + 2
                    and st[pos - 1] == "U"
                    and st[pos - 3] in ("C", "G", "L", "R", "T")
                ):
                    nxt = ("F", 2)
                elif pos > first and st[pos - 1] != "I":
                    nxt = ("K", 2)
            elif st[pos + 1] == "N":
                if pos == first + 1 and st[first] in _VOWELS and not slavo_germanic:
                    nxt = ("KN", "N", 2)
                elif st[pos + 2 : pos + 4] != "EY" and st[pos + 1] != "Y" and not slavo_germanic:
                    nxt = ("N", "KN", 2)
                else:
                    nxt = ("KN", 2)
            elif st[pos + 1 : pos + 3] == "LI" and not slavo_germanic:
                nxt = ("KL", "L", 2)
            elif pos == first and (
                st[pos + 1] == "Y"
                or st[pos + 1 : pos + 3]
                in ("ES", "EP", "EB", "EL", "EY", "IB", "IL", "IN", "IE", "EI", "ER")
            ):
                nxt = ("K", "J", 2)
            elif (
                (st[pos + 1 : pos + 2] == "ER" or st[pos + 1] == "Y")
                and st[first : first + 6] not in ("DANGER", "RANGER", "MANGER")
                and st[pos - 1] not in ("E", "I")
                and st[pos - 1 : pos + 2] not in ("RGY", "OGY")
            ):
                nxt = ("K", "J", 2)
            elif st[pos + 1] in ("E", "I", "Y") or st[pos - 1 : pos + 3] in ("AGGI", "OGGI"):
                if (
                    st[first : first + 4] in ("VON ", "VAN ")
                    or st[first : first + 3] == "SCH"
                    or st[pos + 1 : pos + 3] == "ET"
                ):
                    nxt = ("K", 2)
                elif st[pos + 1 : pos + 5] == "IER ":
                    nxt = ("J", 2)
                else:
                    nxt = ("J", "K", 2)
            elif st[pos + 1] == "G":
                nxt = ("K", 2)
            else:
                nxt = ("K", 1)
        elif ch == "H":
            # kept only when initial-before-vowel or between vowels
            if (pos == first or st[pos - 1] in _VOWELS) and st[pos + 1] in _VOWELS:
                nxt = ("H", 2)
            else:
                nxt = (None, 1)
        elif ch == "J":
            if st[pos : pos + 4] == "JOSE" or st[first : first + 4] == "SAN ":
                if (pos == first and st[pos + 4] == " ") or st[first : first + 4] == "SAN ":
                    nxt = ("H",)
                else:
                    nxt = ("J", "H")
            elif pos == first and st[pos : pos + 4] != "JOSE":
                nxt = ("J", "A")
            elif (
                st[pos - 1] in _VOWELS
                and not slavo_germanic
                and st[pos + 1] in ("A", "O")
            ):
                nxt = ("J", "H")
            elif pos == last:
                nxt = ("J", " ")
            elif st[pos + 1] not in ("L", "T", "K", "S", "N", "M", "B", "Z") and st[
                pos - 1
            ] not in ("S", "K", "L"):
                nxt = ("J",)
            else:
                nxt = (None,)
            nxt = nxt + ((2,) if st[pos + 1] == "J" else (1,))
        elif ch == "K":
            nxt = ("K", 2) if st[pos + 1] == "K" else ("K", 1)
        elif ch == "L":
            if st[pos + 1] == "L":
                if (pos == last - 2 and st[pos - 1 : pos + 3] in ("ILLO", "ILLA", "ALLE")) or (
                    (st[last - 1 : last + 1] in ("AS", "OS") or st[last] in ("A", "O"))
                    and st[pos - 1 : pos + 3] == "ALLE"
                ):
                    nxt = ("L", "", 2)
                else:
                    nxt = ("L", 2)
            else:
                nxt = ("L", 1)
        elif ch == "M":
            if (
                st[pos + 1 : pos + 4] == "UMB"
                and (pos + 1 == last or st[pos + 2 : pos + 4] == "ER")
            ) or st[pos + 1] == "M":
                nxt = ("M", 2)
            else:
                nxt = ("M", 1)
        elif ch == "N":
            nxt = ("N", 2) if st[pos + 1] == "N" else ("N", 1)
        elif ch == "P":
            if st[pos + 1] == "H":
                nxt = ("F", 2)
            elif st[pos + 1] in ("P", "B"):
                nxt = ("P", 2)
            else:
                nxt = ("P", 1)
        elif ch == "Q":
            nxt = ("K", 2) if st[pos + 1] == "Q" else ("K", 1)
        elif ch == "R":
            if (
                pos == last
                and not slavo_germanic
                and st[pos - 2 : pos] == "IE"
                and st[pos - 4 : pos - 2] not in ("ME", "MA")
            ):
                nxt = ("", "R")
            else:
                nxt = ("R",)
            nxt = nxt + ((2,) if st[pos + 1] == "R" else (1,))
        elif ch == "S":
            if st[pos - 1 : pos + 2] in ("ISL", "YSL"):
                nxt = (None, 1)
            elif pos == first and st[first : first + 5] == "SUGAR":
                nxt = ("X", "S", 1)
            elif st[pos : pos + 2] == "SH":
                if st[pos + 1 : pos + 5] in ("HEIM", "HOEK", "HOLM", "HOLZ"):
                    nxt = ("S", 2)
                else:
                    nxt = ("X", 2)
            elif st[pos : pos + 3] in ("SIO", "SIA") or st[pos : pos + 4] == "SIAN":
                if not slavo_germanic:
                    nxt = ("S", "X", 3)
                else:
                    nxt = ("S", 3)
            elif (pos == first and st[pos + 1] in ("M", "N", "L", "W")) or st[pos + 1] == "Z":
                nxt = ("S", "X") + ((2,) if st[pos + 1] == "Z" else (1,))
            elif st[pos : pos + 2] == "SC":
                if st[pos + 2] == "H":
                    if st[pos + 3 : pos + 5] in ("OO", "ER", "EN", "UY", "ED", "EM"):
                        if st[pos + 3 : pos + 5] in ("ER", "EN"):
                            nxt = ("X", "SK", 3)
                        else:
                            nxt = ("SK", 3)
                    elif pos == first and st[first + 3] not in _VOWELS and st[first + 3] != "W":
                        nxt = ("X", "S", 3)
                    else:
                        nxt = ("X", 3)
                elif st[pos + 2] in ("I", "E", "Y"):
                    nxt = ("S", 3)
                else:
                    nxt = ("SK", 3)
            elif pos == last and st[pos - 2 : pos] in ("AI", "OI"):
                nxt = ("", "S", 1)
            else:
                nxt = ("S",) + ((2,) if st[pos + 1] in ("S", "Z") else (1,))
        elif ch == "T":
            if st[pos : pos + 4] == "TION":
                nxt = ("X", 3)
            elif st[pos : pos + 3] in ("TIA", "TCH"):
                nxt = ("X", 3)
            elif st[pos : pos + 2] == "TH" or st[pos : pos + 3] == "TTH":
                if (
                    st[pos + 2 : pos + 4] in ("OM", "AM")
                    or st[first : first + 4] in ("VON ", "VAN ")
                    or st[first : first + 3] == "SCH"
                ):
                    nxt = ("T", 2)
                else:
                    nxt = ("0", "T", 2)
            elif st[pos + 1] in ("T", "D"):
                nxt = ("T", 2)
            else:
                nxt = ("T", 1)
        elif ch == "V":
            nxt = ("F", 2) if st[pos + 1] == "V" else ("F", 1)
        elif ch == "W":
            if st[pos : pos + 2] == "WR":
                nxt = ("R", 2)
            elif pos == first and (st[pos + 1] in _VOWELS or st[pos : pos + 2] == "WH"):
                if st[pos + 1] in _VOWELS:
                    nxt = ("A", "F", 1)
                else:
                    nxt = ("A", 1)
            elif (
                (pos == last and st[pos - 1] in _VOWELS)
                or st[pos - 1 : pos + 5] in ("EWSKI", "EWSKY", "OWSKI", "OWSKY")
                or st[first : first + 3] == "SCH"
            ):
                nxt = ("", "F", 1)
            elif st[pos : pos + 4] in ("WICZ", "WITZ"):
                nxt = ("TS", "FX", 4)
            else:
                nxt = (None, 1)
        elif ch == "X":
            if not (
                pos == last
                and (st[pos - 3 : pos] in ("IAU", "EAU") or st[pos - 2 : pos] in ("AU", "OU"))
            ):
                nxt = ("KS",)
            else:
                nxt = (None,)
            nxt = nxt + ((2,) if st[pos + 1] in ("C", "X") else (1,))
        elif ch == "Z":
            if st[pos + 1] == "H":
                nxt = ("J",)
            elif st[pos + 1 : pos + 3] in ("ZO", "ZI", "ZA") or (
                slavo_germanic and pos > first and st[pos - 1] != "T"
            ):
                nxt = ("S", "TS")
            else:
                nxt = ("S",)
            nxt = nxt + ((2,) if st[pos + 1] == "Z" else (1,))

        if len(nxt) == 2:
            if nxt[0]:
                pri += nxt[0]
                sec += nxt[0]
            pos += nxt[1]
        else:
            if nxt[0]:
                pri += nxt[0]
            if nxt[1]:
                sec += nxt[1]
            pos += nxt[2]

    return pri, (sec if sec != pri else pri)


def phonetic_primary(token: str, max_len: int = DEFAULT_CODE_LENGTH) -> str:
    """Primary Double Metaphone code of ``token``, truncated to ``max_len``.

    The four-character default matches the algorithm's classic code length.
    """
    return double_metaphone(token)[0][:max_len]
