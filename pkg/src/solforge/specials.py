"""Reserved strings shared by the dataset builders and the tokenizer."""

PRE, SUF, MID = "<PRE>", "<SUF>", "<MID>"
TAG_OPEN, TAG_CLOSE = "[Tag]", "[/Tag]"
EOT = "<EOT>"
SPECIAL_TOKENS = [PRE, SUF, MID, TAG_OPEN, TAG_CLOSE, EOT]
# Tag values are single tokens too, so a label is one decision for the model.
TAG_VALUES = ["<security>", "<vulnerable>"]
