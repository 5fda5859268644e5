@problemName Bad
@seriesLength 3
@classLabel true a
@data
1,?,3:a
