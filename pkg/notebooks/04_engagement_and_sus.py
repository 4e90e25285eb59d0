# %% [markdown]
# # From labels to an engagement verdict
#
# A viewing session is summarised by how often each expression appeared,
# how often the expression changed and how long the session ran.  The
# genre decides which expression counts as the intended reaction.

# %%
from chirpface import engagement, sus
from chirpface.engagement import SessionStats

labels = ["Happy"] * 40 + ["SadNeutral"] * 15 + ["Happy"] * 20 + ["Surprise"] * 5
stats = SessionStats.from_labels(labels, length_min=1.0)
print(f"E = {stats.E}, R = {stats.R}, l = {stats.length_min} min")
for genre in ("comedy", "tragedy", "horror", "anger", "mixed"):
    print(f"{genre:8s}", engagement.report(stats, genre).to_dict())

# %% [markdown]
# Usability questionnaires: odd items are positive, even items negative.

# %%
answers = [(5, 1, 5, 1, 5, 1, 5, 1, 5, 1), (4, 2, 4, 2, 4, 2, 4, 2, 4, 2), (3,) * 10]
ages = ["20s", "20s", "40s"]
responses = [sus.SusResponse(a, {"age": g}) for a, g in zip(answers, ages)]
for r in responses:
    print(r.answers, "->", sus.sus_score(r))
print(sus.aggregate(responses, "age"))
