@problemName Bad
@seriesLength 3
@classLabel true a b
@data
