"""Regenerate crates/core/data/sample_urls.csv (deterministic)."""
import csv
import random
import sys

rng = random.Random(20240917)

WORDS = ["news", "docs", "shop", "blog", "music", "travel", "sports", "weather",
         "recipes", "science", "history", "games", "photos", "forum", "wiki",
         "health", "finance", "movies", "books", "events"]
TLDS = ["com", "org", "net", "edu", "io", "co.uk", "de"]
BRANDS = ["paypal", "apple", "amazon", "netflix", "chase", "wellsfargo",
          "microsoft", "dropbox", "ebay", "facebook"]
LURES = ["login", "secure", "account", "verify", "bank", "free", "update",
         "signin", "confirm", "webscr"]
SHADY_TLDS = ["tk", "ml", "ga", "cf", "xyz", "top", "ru", "info"]


def word():
    return rng.choice(WORDS)


def benign():
    host = rng.choice(["", "www.", "en.", "m."]) + word() + rng.choice(["", word()]) + "." + rng.choice(TLDS)
    depth = rng.randint(0, 3)
    path = "".join("/" + word() + rng.choice(["", "-" + word()]) for _ in range(depth))
    if rng.random() < 0.3:
        path += "/" + word() + ".html"
    scheme = rng.choice(["", "", "https://", "https://", "http://"])
    return scheme + host + path


def phishing():
    brand = rng.choice(BRANDS)
    lure = rng.choice(LURES)
    style = rng.randint(0, 3)
    if style == 0:
        host = f"{brand}-{lure}-{rng.randint(10, 9999)}.{rng.choice(SHADY_TLDS)}"
    elif style == 1:
        host = f"{lure}.{brand}.com.{word()}{rng.randint(1, 99)}.{rng.choice(SHADY_TLDS)}"
    elif style == 2:
        host = f"{brand}{rng.randint(100, 999)}.{rng.choice(['000webhostapp.com', 'weebly.com', 'blogspot.com'])}"
    else:
        host = f"www.{brand}-{lure}.{rng.choice(SHADY_TLDS)}"
    path = f"/{lure}/{rng.choice(['index.php', 'signin.html', 'verify.aspx', 'update'])}"
    if rng.random() < 0.5:
        path += f"?session={rng.getrandbits(48):012x}&user=@{brand}"
    return rng.choice(["http://", "", "https://"]) + host + path


def defacement():
    host = "www." + word() + word() + "." + rng.choice(["com", "org", "de", "it", "com.br"])
    opt = rng.choice(["com_content", "com_k2", "com_contact", "com_virtuemart"])
    view = rng.choice(["article", "category", "section", "item"])
    q = f"option={opt}&view={view}&id={rng.randint(1, 999)}:{word()}-{word()}&catid={rng.randint(1, 99)}&Itemid={rng.randint(1, 999)}"
    path = rng.choice(["/index.php", f"/{word()}/index.php", "/index.php/component"])
    return "http://" + host + path + "?" + q


def malware():
    ip = ".".join(str(rng.randint(1, 254)) for _ in range(4))
    style = rng.randint(0, 2)
    if style == 0:
        return f"http://{ip}:{rng.choice([80, 8080, 443, 59123])}/{rng.choice(['bins', 'i', 'Mozi.m', 'x86'])}/{rng.choice(['mozi.a', 'sh', 'arm7', 'bot.exe'])}"
    if style == 1:
        return f"http://{ip}/{rng.choice(['Mozi.m', 'Mozi.a', 'bins.sh', 'dl.exe'])}"
    host = f"{word()}{rng.randint(1000, 99999)}.{rng.choice(SHADY_TLDS)}"
    return f"http://{host}/{rng.choice(['download', 'files', 'tmp'])}/{rng.getrandbits(32):08x}.{rng.choice(['exe', 'apk', 'zip', 'scr'])}"


rows = []
for label, gen, n in [("benign", benign, 180), ("phishing", phishing, 80),
                      ("defacement", defacement, 70), ("malware", malware, 70)]:
    seen = set()
    while len(seen) < n:
        u = gen()
        if u not in seen:
            seen.add(u)
            rows.append((u, label))
rows.append(("http://example-news.com/search?q=cats,dogs&page=2", "benign"))
rng.shuffle(rows)

w = csv.writer(sys.stdout, lineterminator="\n")
w.writerow(["url", "type"])
w.writerows(rows)
